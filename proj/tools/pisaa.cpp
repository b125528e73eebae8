// Experiment harness CLI: validate configs, run replicate sweeps, compute
// oracle weights, summarize output directories, and resume checkpoints.
//
// Exit codes: 0 success, 1 config error, 2 runtime failure, 3 partial
// replicate failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "pisaa/config.hpp"
#include "pisaa/experiment.hpp"

namespace {

std::string default_output_root() {
  const char* env = std::getenv("PISAA_OUTPUT_ROOT");
  return env ? env : ".";
}

int cmd_validate(const std::string& config_path) {
  try {
    pisaa::ExperimentSpec spec = pisaa::load_experiment_file(config_path);
    std::printf("ok: %s (problem %s, %zu kappa x %zu beta x %zu replicates)\n",
                config_path.c_str(), spec.problem_id.c_str(), spec.kappa_sweep.size(),
                spec.beta_sweep.size(), spec.replicates);
    return 0;
  } catch (const pisaa::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
}

int cmd_run(const std::string& config_path, const std::string& output_override) {
  pisaa::ExperimentSpec spec;
  try {
    spec = pisaa::load_experiment_file(config_path);
  } catch (const pisaa::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  if (!output_override.empty()) {
    spec.output_dir = output_override;
  } else if (!std::filesystem::path(spec.output_dir).is_absolute()) {
    spec.output_dir =
        (std::filesystem::path(default_output_root()) / spec.output_dir).string();
  }
  try {
    pisaa::ExperimentOutcome outcome = pisaa::run_experiment(spec);
    std::size_t failed = 0;
    for (const auto& c : outcome.cells) failed += c.failed;
    std::printf("%zu runs, %zu failed; %zu files under %s\n", outcome.cells.size(), failed,
                outcome.files.size(), spec.output_dir.c_str());
    for (const auto& c : outcome.cells)
      if (c.failed)
        std::fprintf(stderr, "run kappa=%zu beta=%g rep=%zu failed: %s\n", c.kappa, c.beta,
                     c.replicate, c.error.c_str());
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
}

int cmd_oracle(const std::string& config_path, const std::string& output_override) {
  try {
    pisaa::ExperimentSpec spec = pisaa::load_experiment_file(config_path);
    if (!output_override.empty()) spec.output_dir = output_override;
    pisaa::write_oracle_file(spec);
    std::printf("oracle written under %s\n", spec.output_dir.c_str());
    return 0;
  } catch (const pisaa::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
}

int cmd_resume(const std::string& checkpoint_path, const std::string& config_path,
               const std::string& trace_out) {
  try {
    pisaa::ExperimentSpec spec = pisaa::load_experiment_file(config_path);
    std::ifstream in(checkpoint_path, std::ios::binary);
    if (!in) {
      std::fprintf(stderr, "cannot open checkpoint: %s\n", checkpoint_path.c_str());
      return 2;
    }
    pisaa::Sampler sampler = pisaa::Sampler::load_checkpoint(in, spec.base);
    sampler.run_all();
    pisaa::Trace trace = sampler.finish();
    std::string path = trace_out.empty() ? checkpoint_path + ".trace.csv" : trace_out;
    pisaa::write_trace_csv(path, trace);
    std::printf("resumed to t=%llu, best %.17g, trace %s\n",
                static_cast<unsigned long long>(trace.iterations), trace.best_energy,
                path.c_str());
    return 0;
  } catch (const pisaa::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PISAA global-optimization benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, output_override, checkpoint_path, trace_out, dir;

  auto* run = app.add_subcommand("run", "run an experiment config or manifest");
  run->add_option("config", config_path, "config or manifest JSON")->required();
  run->add_option("-o,--output", output_override, "override the output directory");

  auto* validate = app.add_subcommand("validate", "validate a config");
  validate->add_option("config", config_path, "config JSON")->required();

  auto* oracle = app.add_subcommand("oracle", "compute and store oracle bias weights");
  oracle->add_option("config", config_path, "config JSON")->required();
  oracle->add_option("-o,--output", output_override, "override the output directory");

  auto* summarize = app.add_subcommand("summarize", "rebuild summary tables from traces");
  summarize->add_option("dir", dir, "experiment output directory")->required();

  auto* resume = app.add_subcommand("resume", "continue a checkpointed run");
  resume->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  resume->add_option("config", config_path, "config the run was started from")->required();
  resume->add_option("-t,--trace", trace_out, "trace CSV to write");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, output_override);
  if (validate->parsed()) return cmd_validate(config_path);
  if (oracle->parsed()) return cmd_oracle(config_path, output_override);
  if (summarize->parsed()) return pisaa::summarize_directory(dir);
  if (resume->parsed()) return cmd_resume(checkpoint_path, config_path, trace_out);
  return 1;
}

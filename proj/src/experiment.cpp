#include "pisaa/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pisaa/ising.hpp"

namespace pisaa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-identical newlines
  if (!out) throw std::runtime_error("cannot write trace file: " + path);

  out << "t,tau,gamma,best_energy";
  for (OpKind op : trace.ops) out << ",accept_" << op_name(op);
  for (std::size_t j = 1; j <= trace.m; ++j) out << ",visit_" << j;
  for (std::size_t j = 1; j <= trace.m; ++j) out << ",theta_" << j;
  out << "\n";

  for (const TraceRecord& rec : trace.records) {
    out << rec.t << ',' << format_double(rec.tau) << ',' << format_double(rec.gamma) << ','
        << format_double(rec.best_energy);
    for (double r : rec.accept_rate) out << ',' << format_double(r);
    for (std::size_t j = 0; j < trace.m; ++j) {
      out << ',';
      if (j < rec.visit.size()) out << format_double(rec.visit[j]);
    }
    for (std::size_t j = 0; j < trace.m; ++j) {
      out << ',';
      if (j < rec.theta.size()) out << format_double(rec.theta[j]);
    }
    out << "\n";
  }
}

namespace {

std::string cell_trace_name(std::size_t kappa, double beta, std::size_t rep) {
  std::ostringstream os;
  os << "trace_k" << kappa << "_b" << format_double(beta) << "_r" << rep << ".csv";
  return os.str();
}

RunConfig cell_config(const ExperimentSpec& spec, std::size_t kappa, double beta,
                      std::size_t rep) {
  RunConfig cfg = spec.base;
  cfg.kappa = kappa;
  cfg.gain.beta = beta;
  if (spec.fixed_budget) cfg.iterations = spec.base.iterations / kappa;
  cfg.seed = derive_seed(spec.master_seed, spec.problem_id, kappa, beta, rep);
  // Sweeping kappa can make population operators unavailable; drop them for
  // single-chain cells instead of failing the whole sweep.
  if (cfg.kappa < 2) {
    cfg.moves.rate(OpKind::kKPointCrossover) = 0.0;
    cfg.moves.rate(OpKind::kSnookerCrossover) = 0.0;
    cfg.moves.rate(OpKind::kLinearCrossover) = 0.0;
  }
  return cfg;
}

void write_oracle_csv(const std::string& path, const OracleWeights& oracle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write oracle file: " + path);
  out << "# tau=" << format_double(oracle.tau) << " grid_points=" << oracle.grid_points
      << " refinement_delta=" << format_double(oracle.max_refinement_delta)
      << " pi_extra=" << format_double(oracle.pi_extra) << "\n";
  out << "j,nonempty,w\n";
  for (std::size_t j = 0; j < oracle.size(); ++j)
    out << (j + 1) << ',' << int(oracle.nonempty[j]) << ','
        << (oracle.nonempty[j] ? format_double(oracle.w[j]) : "") << "\n";
}

struct CellGroup {
  std::size_t kappa;
  double beta;
  std::vector<const CellResult*> runs;
};

std::vector<CellGroup> group_cells(const std::vector<CellResult>& cells) {
  std::map<std::pair<double, std::size_t>, CellGroup> groups;
  for (const CellResult& c : cells) {
    if (c.failed) continue;
    auto key = std::make_pair(c.beta, c.kappa);
    auto& g = groups[key];
    g.kappa = c.kappa;
    g.beta = c.beta;
    g.runs.push_back(&c);
  }
  std::vector<CellGroup> out;
  for (auto& [k, g] : groups) out.push_back(std::move(g));
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  ExperimentOutcome outcome;
  fs::create_directories(spec.output_dir);

  // Oracle first: it is shared by every cell.
  std::optional<OracleWeights> oracle;
  if (spec.oracle_enabled) {
    OracleOptions opt = spec.oracle_options;
    opt.normalization = spec.base.normalization;
    Partition part = spec.base.partition;
    DesiredProbability pi = DesiredProbability::geometric(spec.base.lambda, part.size());
    oracle = oracle_weights(*spec.base.problem, part, pi, spec.oracle_tau, opt);
    std::string path = (fs::path(spec.output_dir) / "oracle.csv").string();
    write_oracle_csv(path, *oracle);
    outcome.files.push_back(path);
  }

  // Enumerate cells and run them on a small worker pool. Results land in
  // pre-assigned slots so the collector below is order-deterministic.
  std::vector<CellResult> cells;
  for (double beta : spec.beta_sweep)
    for (std::size_t kappa : spec.kappa_sweep)
      for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
        CellResult c;
        c.kappa = kappa;
        c.beta = beta;
        c.replicate = rep;
        c.seed = derive_seed(spec.master_seed, spec.problem_id, kappa, beta, rep);
        c.trace_file = cell_trace_name(kappa, beta, rep);
        cells.push_back(std::move(c));
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      CellResult& c = cells[i];
      try {
        RunConfig cfg = cell_config(spec, c.kappa, c.beta, c.replicate);
        std::string ckpt = cfg.checkpoint_stride > 0
                               ? (fs::path(spec.output_dir) / (c.trace_file + ".ckpt")).string()
                               : std::string();
        c.trace = run(cfg, ckpt);
        c.best_energy = c.trace.best_energy;
        c.oracle_error = oracle ? theta_mse(c.trace.final_theta, *oracle,
                                            spec.base.normalization)
                                : std::numeric_limits<double>::quiet_NaN();
      } catch (const std::exception& e) {
        c.failed = true;
        c.error = e.what();
      }
    }
  };
  unsigned n_workers = std::min<unsigned>(spec.parallel,
                                          static_cast<unsigned>(std::max<std::size_t>(
                                              cells.size(), 1)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Single collector: all files written here, in deterministic order.
  const auto* ising = dynamic_cast<const IsingRestoration*>(spec.base.problem.get());
  for (CellResult& c : cells) {
    if (c.failed) continue;
    std::string path = (fs::path(spec.output_dir) / c.trace_file).string();
    write_trace_csv(path, c.trace);
    outcome.files.push_back(path);

    // Best point discovered: restored image for the binary-lattice problem,
    // one CSV row for small continuous problems.
    std::string best_name = "best" + c.trace_file.substr(5);  // trace_... -> best_...
    if (ising != nullptr && c.trace.best_point.size() == ising->dimension()) {
      BinaryImage img{ising->height(), ising->width(), c.trace.best_point};
      std::string bp = (fs::path(spec.output_dir) /
                        (best_name.substr(0, best_name.size() - 4) + ".txt")).string();
      img.save_text(bp);
      outcome.files.push_back(bp);
    } else if (c.trace.best_point.size() <= 1000) {
      std::string bp = (fs::path(spec.output_dir) / best_name).string();
      std::ofstream out(bp, std::ios::binary);
      out << "best_energy," << format_double(c.best_energy) << "\n";
      for (std::size_t i = 0; i < c.trace.best_point.size(); ++i)
        out << (i ? "," : "") << format_double(c.trace.best_point[i]);
      out << "\n";
      outcome.files.push_back(bp);
    }
  }

  std::vector<CellGroup> groups = group_cells(cells);

  {
    std::string path = (fs::path(spec.output_dir) / "summary.csv").string();
    std::ofstream out(path, std::ios::binary);
    out << "kappa,beta,t,mean_best,se_best,min_best,max_best\n";
    for (const CellGroup& g : groups) {
      std::vector<Trace> traces;
      for (const CellResult* r : g.runs) traces.push_back(r->trace);
      ReplicateSummary s = summarize_replicates(traces);
      for (std::size_t k = 0; k < s.t.size(); ++k)
        out << g.kappa << ',' << format_double(g.beta) << ',' << s.t[k] << ','
            << format_double(s.mean[k]) << ',' << format_double(s.se[k]) << ','
            << format_double(s.min[k]) << ',' << format_double(s.max[k]) << "\n";
    }
    outcome.files.push_back(path);
  }

  {
    std::string path = (fs::path(spec.output_dir) / "terminal.csv").string();
    std::ofstream out(path, std::ios::binary);
    out << "kappa,beta,replicates,mean_best,se_best,mean_mse,se_mse\n";
    for (const CellGroup& g : groups) {
      std::vector<double> best, mse;
      for (const CellResult* r : g.runs) {
        best.push_back(r->best_energy);
        if (oracle) mse.push_back(r->oracle_error);
      }
      out << g.kappa << ',' << format_double(g.beta) << ',' << g.runs.size() << ','
          << format_double(mean_of(best)) << ',' << format_double(se_of(best)) << ',';
      if (oracle) out << format_double(mean_of(mse)) << ',' << format_double(se_of(mse));
      else out << ',';
      out << "\n";
    }
    outcome.files.push_back(path);
  }

  if (oracle) {
    std::string path = (fs::path(spec.output_dir) / "mse.csv").string();
    std::ofstream out(path, std::ios::binary);
    out << "kappa,beta,t,mean_mse,se_mse\n";
    for (const CellGroup& g : groups) {
      // Rows exist wherever a theta snapshot was recorded.
      const Trace& first = g.runs.front()->trace;
      for (std::size_t k = 0; k < first.records.size(); ++k) {
        if (first.records[k].theta.empty()) continue;
        std::vector<double> mses;
        bool complete = true;
        for (const CellResult* r : g.runs) {
          if (k >= r->trace.records.size() || r->trace.records[k].theta.empty()) {
            complete = false;
            break;
          }
          mses.push_back(theta_mse(r->trace.records[k].theta, *oracle,
                                   spec.base.normalization));
        }
        if (!complete) continue;
        out << g.kappa << ',' << format_double(g.beta) << ',' << first.records[k].t << ','
            << format_double(mean_of(mses)) << ',' << format_double(se_of(mses)) << "\n";
      }
    }
    outcome.files.push_back(path);
  }

  if (oracle && spec.fixed_budget) {
    // Relative efficiency against the kappa = 1 cell of the same beta.
    std::string path = (fs::path(spec.output_dir) / "re.csv").string();
    std::ofstream out(path, std::ios::binary);
    out << "beta,kappa,re,log_kappa,log_re,theory_slope\n";
    std::string fit_path = (fs::path(spec.output_dir) / "re_fit.csv").string();
    std::ofstream fit(fit_path, std::ios::binary);
    fit << "beta,fitted_slope,theory_slope\n";
    for (double beta : spec.beta_sweep) {
      const CellGroup* single = nullptr;
      for (const CellGroup& g : groups)
        if (g.beta == beta && g.kappa == 1) single = &g;
      if (single == nullptr) continue;
      std::vector<double> err_single;
      for (const CellResult* r : single->runs) err_single.push_back(r->oracle_error);

      std::vector<double> lx, ly;
      for (const CellGroup& g : groups) {
        if (g.beta != beta || g.kappa == 1) continue;
        std::vector<double> err;
        for (const CellResult* r : g.runs) err.push_back(r->oracle_error);
        double re = relative_efficiency(err, err_single);
        lx.push_back(std::log(static_cast<double>(g.kappa)));
        ly.push_back(std::log(re));
        out << format_double(beta) << ',' << g.kappa << ',' << format_double(re) << ','
            << format_double(lx.back()) << ',' << format_double(ly.back()) << ','
            << format_double(beta - 1.0) << "\n";
      }
      if (lx.size() >= 2)
        fit << format_double(beta) << ',' << format_double(fit_slope(lx, ly)) << ','
            << format_double(beta - 1.0) << "\n";
    }
    outcome.files.push_back(path);
    outcome.files.push_back(fit_path);
  }

  // Manifest last: everything needed to reproduce the outputs bytewise.
  {
    json manifest;
    manifest["pisaa_manifest"] = 1;
    manifest["version"] = kVersion;
    manifest["config"] = json::parse(spec.normalized);
    manifest["config_hash"] = config_hash(spec.normalized);
    manifest["master_seed"] = spec.master_seed;
    json runs = json::array();
    for (const CellResult& c : cells) {
      json r;
      r["kappa"] = c.kappa;
      r["beta"] = c.beta;
      r["replicate"] = c.replicate;
      r["seed"] = c.seed;
      r["trace"] = c.trace_file;
      r["status"] = c.failed ? "failed" : "ok";
      if (c.failed) r["error"] = c.error;
      else r["best_energy"] = c.best_energy;
      runs.push_back(std::move(r));
    }
    manifest["runs"] = std::move(runs);
    std::string path = (fs::path(spec.output_dir) / "manifest.json").string();
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << "\n";
    outcome.files.push_back(path);
  }

  // Exit code policy: a fully failed cell is fatal for that cell (3); if
  // every run failed the experiment itself failed (2).
  std::map<std::pair<double, std::size_t>, std::pair<std::size_t, std::size_t>> tally;
  for (const CellResult& c : cells) {
    auto& [fails, total] = tally[{c.beta, c.kappa}];
    fails += c.failed ? 1 : 0;
    ++total;
  }
  bool any_cell_dead = false, all_dead = true;
  for (const auto& [key, ft] : tally) {
    if (ft.first == ft.second) any_cell_dead = true;
    if (ft.first < ft.second) all_dead = false;
  }
  outcome.exit_code = all_dead ? 2 : (any_cell_dead ? 3 : 0);
  outcome.cells = std::move(cells);
  return outcome;
}

int write_oracle_file(const ExperimentSpec& spec) {
  OracleOptions opt = spec.oracle_options;
  opt.normalization = spec.base.normalization;
  DesiredProbability pi =
      DesiredProbability::geometric(spec.base.lambda, spec.base.partition.size());
  OracleWeights oracle =
      oracle_weights(*spec.base.problem, spec.base.partition, pi, spec.oracle_tau, opt);
  fs::create_directories(spec.output_dir);
  write_oracle_csv((fs::path(spec.output_dir) / "oracle.csv").string(), oracle);
  return 0;
}

int summarize_directory(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) {
    std::fprintf(stderr, "summarize: no manifest.json in %s\n", dir.c_str());
    return 2;
  }
  json manifest = json::parse(in, nullptr, /*allow_exceptions=*/true);

  // Minimal trace parse: t and best_energy columns of each ok run.
  struct MiniRun {
    std::size_t kappa;
    double beta;
    Trace trace;
  };
  std::vector<MiniRun> runs;
  for (const auto& r : manifest.at("runs")) {
    if (r.at("status") != "ok") continue;
    MiniRun mr;
    mr.kappa = r.at("kappa").get<std::size_t>();
    mr.beta = r.at("beta").get<double>();
    std::ifstream tf(fs::path(dir) / r.at("trace").get<std::string>());
    if (!tf) continue;
    std::string line;
    std::getline(tf, line);  // header
    while (std::getline(tf, line)) {
      TraceRecord rec;
      std::istringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');
      rec.t = std::stoull(cell);
      std::getline(ss, cell, ',');
      std::getline(ss, cell, ',');
      std::getline(ss, cell, ',');
      rec.best_energy = std::stod(cell);
      mr.trace.records.push_back(std::move(rec));
    }
    mr.trace.best_energy =
        mr.trace.records.empty() ? 0.0 : mr.trace.records.back().best_energy;
    runs.push_back(std::move(mr));
  }

  std::map<std::pair<double, std::size_t>, std::vector<Trace>> groups;
  for (MiniRun& mr : runs) groups[{mr.beta, mr.kappa}].push_back(std::move(mr.trace));

  std::ofstream out(fs::path(dir) / "summary.csv", std::ios::binary);
  out << "kappa,beta,t,mean_best,se_best,min_best,max_best\n";
  for (auto& [key, traces] : groups) {
    ReplicateSummary s = summarize_replicates(traces);
    for (std::size_t k = 0; k < s.t.size(); ++k)
      out << key.second << ',' << format_double(key.first) << ',' << s.t[k] << ','
          << format_double(s.mean[k]) << ',' << format_double(s.se[k]) << ','
          << format_double(s.min[k]) << ',' << format_double(s.max[k]) << "\n";
  }
  return 0;
}

}  // namespace pisaa

// Command-line front end: data generation, reference optima, single runs,
// grid searches and budget sweeps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "trsvr/harness.hpp"

namespace {

using namespace trsvr;

enum Exit { kOk = 0, kConfig = 2, kDiverged = 3, kIo = 4 };

struct RunFlags {
  std::string config_file;
  std::string method = "trsvr";
  std::string data;
  Index samples = 8000;
  Index dim = 32;
  double kappa = 1e4;
  std::uint64_t data_seed = 0;
  bool raw_spectrum = false;
  std::string objective = "convex";
  double l2 = 1e-4;
  double dw = 1e-4;
  double dw_center = 0.5;

  double alpha = 0.06;
  double lr = 1e-2;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double delta0 = 1.0;
  double delta_max = 0.0;
  double gamma1 = 4.91;
  double gamma2 = 0.03;
  Index batch = 200;
  Index inner = 100;
  std::string hessian = "esth";
  int cg_max = 0;
  double fd_eps = 1e-6;
  double max_passes = std::numeric_limits<double>::infinity();

  Index epochs = 10;
  std::uint64_t seed = 0;
  Index record_every = 0;
  std::string out;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  bool no_fstar = false;
  std::string init = "normal";
  std::uint64_t init_seed = 0;
  double radius = 10.0;
  bool no_timing = false;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config_file, "JSON run config; other flags are ignored");
  app->add_option("--method", f.method,
                  "trsvr, sgd, adam, svrg, saga, sarah, classic_tr or trish")->capture_default_str();
  app->add_option("--data", f.data, "LIBSVM file; synthetic data when omitted");
  app->add_option("--samples", f.samples, "synthetic sample count")->capture_default_str();
  app->add_option("--dim", f.dim, "synthetic dimension")->capture_default_str();
  app->add_option("--kappa", f.kappa, "synthetic condition number")->capture_default_str();
  app->add_option("--data-seed", f.data_seed, "synthetic data seed")->capture_default_str();
  app->add_flag("--raw-spectrum", f.raw_spectrum, "keep the covariance spectrum on [1, kappa]");
  app->add_option("--objective", f.objective, "convex or nonconvex")->capture_default_str();
  app->add_option("--l2", f.l2, "l2 coefficient")->capture_default_str();
  app->add_option("--dw", f.dw, "double-well coefficient (nonconvex)")->capture_default_str();
  app->add_option("--dw-center", f.dw_center, "double-well center a")->capture_default_str();

  app->add_option("--alpha", f.alpha, "radius-control parameter (trsvr, trish)")->capture_default_str();
  app->add_option("--lr", f.lr, "learning rate")->capture_default_str();
  app->add_option("--momentum", f.momentum, "SGD momentum")->capture_default_str();
  app->add_option("--beta1", f.beta1, "Adam beta1")->capture_default_str();
  app->add_option("--beta2", f.beta2, "Adam beta2")->capture_default_str();
  app->add_option("--delta0", f.delta0, "classic TR initial radius")->capture_default_str();
  app->add_option("--delta-max", f.delta_max, "classic TR maximum radius (0: 10 delta0)");
  app->add_option("--gamma1", f.gamma1, "TRish gamma1")->capture_default_str();
  app->add_option("--gamma2", f.gamma2, "TRish gamma2")->capture_default_str();
  app->add_option("--batch", f.batch, "mini-batch size b")->capture_default_str();
  app->add_option("--inner", f.inner, "inner-loop length S")->capture_default_str();
  app->add_option("--hessian", f.hessian, "id, esth or exact")->capture_default_str();
  app->add_option("--cg-max", f.cg_max, "CG iteration cap (default 200 convex, 500 otherwise)");
  app->add_option("--fd-eps", f.fd_eps, "finite-difference eps0")->capture_default_str();
  app->add_option("--max-passes", f.max_passes, "stop after this many effective passes");

  app->add_option("--epochs", f.epochs, "epochs")->capture_default_str();
  app->add_option("--seed", f.seed, "run seed")->capture_default_str();
  app->add_option("--record-every", f.record_every, "steps between records (0: auto)");
  app->add_option("--out", f.out, "output stem or directory");
  app->add_option("--f-star", f.f_star, "reference optimum");
  app->add_flag("--no-fstar", f.no_fstar, "skip the reference optimum");
  app->add_option("--init", f.init, "normal or zeros")->capture_default_str();
  app->add_option("--init-seed", f.init_seed, "seed of the initial point")->capture_default_str();
  app->add_option("--radius", f.radius, "ball radius for the Lipschitz bound")->capture_default_str();
  app->add_flag("--no-timing", f.no_timing, "write zero wall clock for reproducible output");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig to_run_config(const RunFlags& f) {
  if (!f.config_file.empty()) return parse_run_config(read_text(f.config_file));
  RunConfig cfg;
  if (f.data.empty()) {
    SyntheticSource s;
    s.params.samples = f.samples;
    s.params.dim = f.dim;
    s.params.condition_number = f.kappa;
    s.params.seed = f.data_seed;
    s.params.unit_mean_spectrum = !f.raw_spectrum;
    cfg.source = s;
  } else {
    cfg.source = LibsvmSource{f.data};
  }
  const ObjectiveMode mode = objective_mode_from_string(f.objective);
  cfg.objective = mode == ObjectiveMode::Convex ? ObjectiveSpec::convex(f.l2)
                                                : ObjectiveSpec::nonconvex(f.l2, f.dw, f.dw_center);
  const int cg_max = f.cg_max > 0 ? f.cg_max : (mode == ObjectiveMode::Convex ? 200 : 500);
  const HessianMode hessian = hessian_mode_from_string(f.hessian);
  if (f.method == "trsvr") {
    TrsvrConfig t;
    t.alpha = f.alpha;
    t.batch_size = f.batch;
    t.inner_len = f.inner;
    t.hessian = hessian;
    t.cg_max_iters = cg_max;
    t.fd.eps0 = f.fd_eps;
    t.max_passes = f.max_passes;
    cfg.method = t;
  } else {
    BaselineConfig b;
    b.method = baseline_method_from_string(f.method);
    b.lr = f.lr;
    b.momentum = f.momentum;
    b.beta1 = f.beta1;
    b.beta2 = f.beta2;
    b.delta0 = f.delta0;
    b.delta_max = f.delta_max;
    b.alpha = f.alpha;
    b.gamma1 = f.gamma1;
    b.gamma2 = f.gamma2;
    b.batch_size = f.batch;
    b.inner_len = f.inner;
    b.hessian = hessian;
    b.cg_max_iters = cg_max;
    b.fd.eps0 = f.fd_eps;
    b.max_passes = f.max_passes;
    cfg.method = b;
  }
  cfg.epochs = f.epochs;
  cfg.seed = f.seed;
  cfg.record_every = f.record_every;
  cfg.output_path = f.out;
  if (!std::isnan(f.f_star)) cfg.f_star = f.f_star;
  cfg.compute_fstar = !f.no_fstar;
  cfg.init = f.init == "zeros" ? InitKind::Zeros : InitKind::Normal;
  if (f.init != "zeros" && f.init != "normal") throw ConfigError("unknown init kind: " + f.init);
  cfg.init_seed = f.init_seed;
  cfg.lipschitz_radius = f.radius;
  cfg.timing = !f.no_timing;
  return cfg;
}

// "name=lo:hi:count" is log-spaced; "name=v1,v2,..." is explicit.
GridAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("axis must look like name=lo:hi:count or name=v1,v2");
  GridAxis axis;
  axis.name = spec.substr(0, eq);
  const std::string rest = spec.substr(eq + 1);
  try {
    if (rest.find(':') != std::string::npos) {
      std::stringstream ss(rest);
      std::string lo, hi, count;
      std::getline(ss, lo, ':');
      std::getline(ss, hi, ':');
      std::getline(ss, count, ':');
      axis.values = log_space(std::stod(lo), std::stod(hi), std::stoi(count));
    } else {
      std::stringstream ss(rest);
      for (std::string v; std::getline(ss, v, ',');) axis.values.push_back(std::stod(v));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("bad axis values: " + spec);
  }
  return axis;
}

void report(const ExperimentResult& r) {
  const auto& recs = r.trajectory.records;
  if (recs.empty()) return;
  const auto& last = recs.back();
  std::printf("method=%s passes=%.6g f=%.17g grad_norm_sq=%.6g gap=%.6g f_star=%s\n",
              last.method.c_str(), last.effective_passes, last.f_value, last.grad_norm_sq,
              last.optimality_gap, r.f_star_label.c_str());
  if (!r.csv_path.empty()) std::printf("wrote %s and %s\n", r.csv_path.c_str(), r.json_path.c_str());
  if (r.trajectory.diverged) std::fprintf(stderr, "diverged: %s\n", r.trajectory.diagnostic.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic trust-region optimization with variance reduction"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-synthetic", "write an ill-conditioned synthetic dataset");
  SyntheticParams gp;
  bool gen_raw = false;
  std::string gen_out;
  gen->add_option("--samples", gp.samples)->capture_default_str();
  gen->add_option("--dim", gp.dim)->capture_default_str();
  gen->add_option("--kappa", gp.condition_number)->capture_default_str();
  gen->add_option("--seed", gp.seed)->capture_default_str();
  gen->add_flag("--raw-spectrum", gen_raw);
  gen->add_option("--out", gen_out, "LIBSVM output path")->required();

  RunFlags fstar_flags, run_flags, grid_flags, sweep_flags, export_flags;
  auto* fstar = app.add_subcommand("fstar", "compute the reference optimum");
  add_run_flags(fstar, fstar_flags);

  auto* run = app.add_subcommand("run", "run one method and write CSV plus JSON");
  add_run_flags(run, run_flags);

  auto* grid = app.add_subcommand("grid", "grid search over log-spaced axes");
  add_run_flags(grid, grid_flags);
  std::vector<std::string> axes;
  std::string metric = "final_gap";
  double threshold = 1e-6;
  grid->add_option("--axis", axes, "name=lo:hi:count or name=v1,v2,...")->required();
  grid->add_option("--metric", metric, "final_gap, final_grad_norm_sq or passes_to_threshold")
      ->capture_default_str();
  grid->add_option("--threshold", threshold, "gap threshold")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep-budget", "TRSVR over (b, S) pairs with b S fixed");
  add_run_flags(sweep, sweep_flags);
  Index budget = 40000;
  std::vector<Index> batches;
  bool execute = false;
  sweep->add_option("--budget", budget, "per-epoch budget b S")->capture_default_str();
  sweep->add_option("--batches", batches, "batch sizes; the standard regimes when omitted")->delimiter(',');
  sweep->add_flag("--execute", execute, "run every cell instead of listing them");

  auto* exp = app.add_subcommand("export", "print the resolved JSON config for the given flags");
  add_run_flags(exp, export_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (gen->parsed()) {
      gp.unit_mean_spectrum = !gen_raw;
      const SyntheticProblem p = generate_synthetic(gp);
      write_file_atomic(gen_out, to_libsvm_string(p.data));
      std::printf("wrote %s (N=%ld, d=%ld)\n", gen_out.c_str(), static_cast<long>(p.data.size()),
                  static_cast<long>(p.data.dim()));
      return kOk;
    }
    if (fstar->parsed()) {
      const RunConfig cfg = to_run_config(fstar_flags);
      const auto problem = build_problem(cfg.source, cfg.objective);
      const auto r = compute_fstar(problem->objective(),
                                   initial_point(cfg.init, problem->objective().dim(), cfg.init_seed));
      nlohmann::json j = {{"f_star", r.f_star},   {"certificate", r.certificate},
                          {"converged", r.converged}, {"label", r.label},
                          {"iterations", r.iterations}};
      std::printf("%s\n", j.dump(2).c_str());
      if (!r.converged) std::fprintf(stderr, "warning: tolerance not reached; best point returned\n");
      return kOk;
    }
    if (run->parsed()) {
      const ExperimentResult r = run_experiment(to_run_config(run_flags));
      report(r);
      return r.trajectory.diverged ? kDiverged : kOk;
    }
    if (grid->parsed()) {
      GridSpec spec;
      for (const auto& a : axes) spec.axes.push_back(parse_axis(a));
      if (metric == "final_gap") spec.metric = GridMetric::FinalGap;
      else if (metric == "final_grad_norm_sq") spec.metric = GridMetric::FinalGradNormSq;
      else if (metric == "passes_to_threshold") spec.metric = GridMetric::PassesToThreshold;
      else throw ConfigError("unknown metric: " + metric);
      spec.threshold = threshold;
      RunConfig base = to_run_config(grid_flags);
      const std::string out = base.output_path;
      base.output_path.clear();
      const GridResult result = grid_search(base, spec);
      const std::string csv = grid_to_csv(result);
      if (out.empty()) {
        std::fputs(csv.c_str(), stdout);
      } else {
        write_file_atomic(out, csv);
        std::printf("wrote %s\n", out.c_str());
      }
      return kOk;
    }
    if (sweep->parsed()) {
      const auto cells = batches.empty() ? sensitivity_regimes() : sweep_budget(budget, batches);
      std::printf("regime,batch_size,inner_len\n");
      for (const auto& c : cells) {
        std::printf("%s,%ld,%ld\n", c.regime.c_str(), static_cast<long>(c.batch_size),
                    static_cast<long>(c.inner_len));
      }
      if (!execute) return kOk;
      RunConfig base = to_run_config(sweep_flags);
      if (!std::holds_alternative<TrsvrConfig>(base.method)) throw ConfigError("sweep-budget runs TRSVR");
      const auto problem = build_problem(base.source, base.objective);
      if (!base.f_star && base.compute_fstar) {
        base.f_star = compute_fstar(problem->objective(),
                                    initial_point(base.init, problem->objective().dim(), base.init_seed))
                          .f_star;
      }
      int code = kOk;
      for (const auto& c : cells) {
        RunConfig cfg = base;
        auto& t = std::get<TrsvrConfig>(cfg.method);
        t.batch_size = c.batch_size;
        t.inner_len = c.inner_len;
        if (!base.output_path.empty()) {
          std::filesystem::path dir(base.output_path);
          cfg.output_path = (dir / ("b" + std::to_string(c.batch_size) + "_S" +
                                    std::to_string(c.inner_len) + "_seed" + std::to_string(cfg.seed)))
                                .string();
        }
        const ExperimentResult r = run_on_problem(*problem, cfg);
        report(r);
        if (r.trajectory.diverged) code = kDiverged;
      }
      return code;
    }
    if (exp->parsed()) {
      const RunConfig cfg = to_run_config(export_flags);
      const std::string text = export_json(cfg);
      if (export_flags.out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        write_file_atomic(export_flags.out, text);
      }
      return kOk;
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const GridError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDiverged;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kOk;
}

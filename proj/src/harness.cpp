#include "trsvr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace trsvr {

using nlohmann::json;

namespace {

// JSON has no infinity; unbounded budgets are stored as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

json method_to_json(const MethodConfig& method) {
  if (const auto* t = std::get_if<TrsvrConfig>(&method)) {
    return {{"name", "trsvr"},
            {"alpha", t->alpha},
            {"batch_size", t->batch_size},
            {"inner_len", t->inner_len},
            {"hessian", to_string(t->hessian)},
            {"cg_max_iters", t->cg_max_iters},
            {"fd_eps0", t->fd.eps0},
            {"epochs", t->epochs},
            {"seed", t->seed},
            {"record_every", t->record_every},
            {"verify_cauchy", t->verify_cauchy},
            {"max_passes", finite_or_null(t->max_passes)}};
  }
  const auto& b = std::get<BaselineConfig>(method);
  return {{"name", to_string(b.method)},
          {"lr", b.lr},
          {"momentum", b.momentum},
          {"beta1", b.beta1},
          {"beta2", b.beta2},
          {"eps_adam", b.eps_adam},
          {"delta0", b.delta0},
          {"delta_max", b.delta_max},
          {"eta_accept", b.eta_accept},
          {"alpha", b.alpha},
          {"gamma1", b.gamma1},
          {"gamma2", b.gamma2},
          {"batch_size", b.batch_size},
          {"inner_len", b.inner_len},
          {"hessian", to_string(b.hessian)},
          {"cg_max_iters", b.cg_max_iters},
          {"fd_eps0", b.fd.eps0},
          {"epochs", b.epochs},
          {"seed", b.seed},
          {"record_every", b.record_every},
          {"grad_norm_sq_tol", b.grad_norm_sq_tol},
          {"max_passes", finite_or_null(b.max_passes)}};
}

MethodConfig method_from_json(const json& j) {
  const std::string name = j.at("name").get<std::string>();
  auto read_common = [&](auto& c) {
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "inner_len", c.inner_len);
    read_opt(j, "cg_max_iters", c.cg_max_iters);
    read_opt(j, "fd_eps0", c.fd.eps0);
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "seed", c.seed);
    read_opt(j, "record_every", c.record_every);
    if (auto it = j.find("hessian"); it != j.end()) c.hessian = hessian_mode_from_string(it->get<std::string>());
    if (auto it = j.find("max_passes"); it != j.end()) c.max_passes = number_or_inf(*it);
  };
  if (name == "trsvr") {
    TrsvrConfig t;
    read_opt(j, "alpha", t.alpha);
    read_opt(j, "verify_cauchy", t.verify_cauchy);
    read_common(t);
    return t;
  }
  BaselineConfig b;
  b.method = baseline_method_from_string(name);
  read_opt(j, "lr", b.lr);
  read_opt(j, "momentum", b.momentum);
  read_opt(j, "beta1", b.beta1);
  read_opt(j, "beta2", b.beta2);
  read_opt(j, "eps_adam", b.eps_adam);
  read_opt(j, "delta0", b.delta0);
  read_opt(j, "delta_max", b.delta_max);
  read_opt(j, "eta_accept", b.eta_accept);
  read_opt(j, "alpha", b.alpha);
  read_opt(j, "gamma1", b.gamma1);
  read_opt(j, "gamma2", b.gamma2);
  read_opt(j, "grad_norm_sq_tol", b.grad_norm_sq_tol);
  read_common(b);
  return b;
}

std::string to_string(InitKind kind) { return kind == InitKind::Zeros ? "zeros" : "normal"; }

InitKind init_kind_from_string(const std::string& s) {
  if (s == "zeros") return InitKind::Zeros;
  if (s == "normal") return InitKind::Normal;
  throw ConfigError("unknown init kind: " + s);
}

}  // namespace

std::string method_name(const MethodConfig& method) {
  if (const auto* t = std::get_if<TrsvrConfig>(&method)) return "trsvr-" + to_string(t->hessian);
  return to_string(std::get<BaselineConfig>(method).method);
}

MethodConfig resolved_method(const RunConfig& cfg) {
  return std::visit(
      [&](auto c) -> MethodConfig {
        c.epochs = cfg.epochs;
        c.seed = cfg.seed;
        c.record_every = cfg.record_every;
        return c;
      },
      cfg.method);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["schema"] = kSchemaVersion;
  if (const auto* s = std::get_if<SyntheticSource>(&cfg.source)) {
    j["source"] = {{"kind", "synthetic"},
                   {"samples", s->params.samples},
                   {"dim", s->params.dim},
                   {"condition_number", s->params.condition_number},
                   {"seed", s->params.seed},
                   {"unit_mean_spectrum", s->params.unit_mean_spectrum}};
  } else {
    j["source"] = {{"kind", "libsvm"}, {"path", std::get<LibsvmSource>(cfg.source).path}};
  }
  j["objective"] = {{"mode", to_string(cfg.objective.mode)},
                    {"l2_coef", cfg.objective.l2_coef},
                    {"dw_coef", cfg.objective.dw_coef},
                    {"dw_center", cfg.objective.dw_center}};
  j["method"] = method_to_json(cfg.method);
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["record_every"] = cfg.record_every;
  j["output_path"] = cfg.output_path;
  j["f_star"] = cfg.f_star ? json(*cfg.f_star) : json(nullptr);
  j["compute_fstar"] = cfg.compute_fstar;
  j["init"] = to_string(cfg.init);
  j["init_seed"] = cfg.init_seed;
  j["lipschitz_radius"] = cfg.lipschitz_radius;
  j["timing"] = cfg.timing;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (auto it = j.find("schema"); it != j.end() && it->get<std::string>() != kSchemaVersion) {
      throw ConfigError("unsupported schema " + it->get<std::string>());
    }
    RunConfig cfg;
    if (auto it = j.find("source"); it != j.end()) {
      const std::string kind = it->at("kind").get<std::string>();
      if (kind == "synthetic") {
        SyntheticSource s;
        read_opt(*it, "samples", s.params.samples);
        read_opt(*it, "dim", s.params.dim);
        read_opt(*it, "condition_number", s.params.condition_number);
        read_opt(*it, "seed", s.params.seed);
        read_opt(*it, "unit_mean_spectrum", s.params.unit_mean_spectrum);
        cfg.source = s;
      } else if (kind == "libsvm") {
        cfg.source = LibsvmSource{it->at("path").get<std::string>()};
      } else {
        throw ConfigError("unknown source kind: " + kind);
      }
    }
    if (auto it = j.find("objective"); it != j.end()) {
      if (auto m = it->find("mode"); m != it->end()) {
        cfg.objective.mode = objective_mode_from_string(m->get<std::string>());
      }
      read_opt(*it, "l2_coef", cfg.objective.l2_coef);
      read_opt(*it, "dw_coef", cfg.objective.dw_coef);
      read_opt(*it, "dw_center", cfg.objective.dw_center);
    }
    if (auto it = j.find("method"); it != j.end()) cfg.method = method_from_json(*it);
    read_opt(j, "epochs", cfg.epochs);
    read_opt(j, "seed", cfg.seed);
    read_opt(j, "record_every", cfg.record_every);
    read_opt(j, "output_path", cfg.output_path);
    if (auto it = j.find("f_star"); it != j.end() && !it->is_null()) cfg.f_star = it->get<double>();
    read_opt(j, "compute_fstar", cfg.compute_fstar);
    if (auto it = j.find("init"); it != j.end()) cfg.init = init_kind_from_string(it->get<std::string>());
    read_opt(j, "init_seed", cfg.init_seed);
    read_opt(j, "lipschitz_radius", cfg.lipschitz_radius);
    read_opt(j, "timing", cfg.timing);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string export_json(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

// Problems ---------------------------------------------------------------------

Problem::Problem(Dataset data, const ObjectiveSpec& spec, std::optional<Vector> ground_truth)
    : data_(std::move(data)), objective_(spec, data_), truth_(std::move(ground_truth)) {}

std::unique_ptr<Problem> build_problem(const ProblemSource& source, const ObjectiveSpec& spec) {
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (const auto* s = std::get_if<SyntheticSource>(&source)) {
    SyntheticProblem p;
    try {
      p = generate_synthetic(s->params);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return std::make_unique<Problem>(std::move(p.data), spec, std::move(p.ground_truth));
  }
  const std::string& path = std::get<LibsvmSource>(source).path;
  try {
    return std::make_unique<Problem>(load_libsvm(path), spec);
  } catch (const ParseError& e) {
    throw IoError(path + ": " + e.what());
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  }
}

Vector initial_point(InitKind kind, Index dim, std::uint64_t seed) {
  Vector x = Vector::Zero(dim);
  if (kind == InitKind::Normal) {
    Rng rng(seed);
    std::normal_distribution<double> normal;
    for (Index j = 0; j < dim; ++j) x[j] = normal(rng);
  }
  return x;
}

FstarResult compute_fstar(const FiniteSum& f, const Vector& x0, const FstarOptions& options) {
  BaselineConfig cfg;
  cfg.method = BaselineMethod::ClassicTR;
  cfg.hessian = HessianMode::Exact;
  cfg.delta0 = options.delta0;
  cfg.delta_max = 1e8 * options.delta0;
  cfg.cg_max_iters = options.cg_max_iters;
  cfg.epochs = options.max_iters;
  cfg.grad_norm_sq_tol = options.grad_norm_sq_tol;
  Recorder recorder(f, "fstar", 0);
  recorder.set_timing(false);
  const Trajectory t = classic_tr_run(f, cfg, x0, recorder);

  FstarResult out;
  out.label = f.is_convex() ? "global" : "local_reference";
  out.iterations = static_cast<Index>(t.outer_loops.size());
  // Accepted iterates only decrease f (up to roundoff), so the last finite
  // record is the reference point.
  const auto& recs = t.records;
  auto best = std::find_if(recs.rbegin(), recs.rend(),
                           [](const MetricsRecord& m) { return std::isfinite(m.f_value); });
  if (best == recs.rend()) throw std::runtime_error("reference run produced no finite value");
  out.f_star = best->f_value;
  out.certificate = std::sqrt(best->grad_norm_sq);
  out.converged = best->grad_norm_sq <= options.grad_norm_sq_tol;
  return out;
}

// Output -----------------------------------------------------------------------

namespace {

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string output_stem(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const std::string& out = cfg.output_path;
  const std::string leaf = method_name(cfg.method) + "_seed" + std::to_string(cfg.seed);
  if (out.back() == '/' || fs::is_directory(out)) return (fs::path(out) / leaf).string();
  fs::path p(out);
  if (p.extension() == ".csv" || p.extension() == ".json") p.replace_extension();
  return p.string();
}

}  // namespace

std::string export_csv(const std::vector<MetricsRecord>& records) {
  std::string out = "method,seed,epoch,effective_passes,wall_clock_s,f_value,grad_norm_sq,optimality_gap\n";
  for (const auto& r : records) {
    out += r.method;
    out += ',' + std::to_string(r.seed);
    for (double v : {r.epoch, r.effective_passes, r.wall_clock_s, r.f_value, r.grad_norm_sq,
                     r.optimality_gap}) {
      out += ',' + format17(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<MetricsRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty metrics CSV");
  std::vector<MetricsRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw IoError("metrics CSV line " + std::to_string(lineno) + ": expected 8 fields");
    MetricsRecord r;
    r.method = cells[0];
    try {
      r.seed = std::stoull(cells[1]);
      double* fields[] = {&r.epoch, &r.effective_passes, &r.wall_clock_s, &r.f_value,
                          &r.grad_norm_sq, &r.optimality_gap};
      for (std::size_t k = 0; k < 6; ++k) *fields[k] = std::strtod(cells[k + 2].c_str(), nullptr);
    } catch (const std::exception&) {
      throw IoError("metrics CSV line " + std::to_string(lineno) + ": bad number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path);
  }
}

ExperimentResult run_on_problem(const Problem& problem, const RunConfig& cfg) {
  const auto& f = problem.objective();
  const Vector x0 = initial_point(cfg.init, f.dim(), cfg.init_seed);

  ExperimentResult result;
  if (cfg.f_star) {
    result.f_star = *cfg.f_star;
    result.f_star_label = "given";
  } else if (cfg.compute_fstar) {
    result.fstar = compute_fstar(f, x0);
    result.f_star = result.fstar->f_star;
    result.f_star_label = result.fstar->label;
  }

  const MethodConfig method = resolved_method(cfg);
  Recorder recorder(f, method_name(method), cfg.seed, result.f_star);
  recorder.set_timing(cfg.timing);
  try {
    if (const auto* t = std::get_if<TrsvrConfig>(&method)) {
      result.trajectory = trsvr_run(f, *t, x0, recorder);
    } else {
      result.trajectory = run_baseline(f, std::get<BaselineConfig>(method), x0, recorder);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (cfg.output_path.empty()) return result;
  const std::string stem = output_stem(cfg);
  result.csv_path = stem + ".csv";
  result.json_path = stem + ".json";

  const Trajectory& t = result.trajectory;
  json side;
  side["schema"] = kSchemaVersion;
  side["config"] = to_json(cfg);
  side["method"] = method_name(method);
  side["samples"] = f.size();
  side["dim"] = f.dim();
  side["lipschitz"] = lipschitz_bound(f.spec(), problem.data(), cfg.lipschitz_radius).L;
  side["f_star"] = finite_or_null(result.f_star);
  side["f_star_label"] = result.f_star_label;
  if (result.fstar) {
    side["f_star_certificate"] = result.fstar->certificate;
    side["f_star_converged"] = result.fstar->converged;
  }
  side["diverged"] = t.diverged;
  side["diagnostic"] = t.diagnostic;
  side["counters"] = {{"component_grad_evals", t.counters.component_grad_evals},
                      {"full_grad_evals", t.counters.full_grad_evals},
                      {"hvp_probe_evals", t.counters.hvp_probe_evals}};
  side["records"] = t.records.size();
  side["stationary_event"] =
      t.stationary_event ? json{t.stationary_event->first, t.stationary_event->second} : json(nullptr);
  side["cauchy_checks"] = t.cauchy_checks;
  side["cauchy_violations"] = t.cauchy_violations;
  side["csv"] = std::filesystem::path(result.csv_path).filename().string();

  write_file_atomic(result.csv_path, export_csv(t.records));
  write_file_atomic(result.json_path, side.dump(2) + "\n");
  return result;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  const auto problem = build_problem(cfg.source, cfg.objective);
  return run_on_problem(*problem, cfg);
}

// Grid search -----------------------------------------------------------------

std::vector<double> log_space(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ConfigError("log_space needs 0 < lo <= hi, count >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / (count - 1);
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = std::exp(a + step * k);
  out.front() = lo;
  out.back() = hi;
  return out;
}

void apply_axis(RunConfig& cfg, const std::string& name, double value) {
  auto as_index = [&]() {
    const double r = std::round(value);
    if (r < 1.0 || std::abs(r - value) > 1e-9) throw ConfigError(name + " must be a positive integer");
    return static_cast<Index>(r);
  };
  std::visit(
      [&](auto& c) {
        using C = std::decay_t<decltype(c)>;
        if (name == "batch") {
          c.batch_size = as_index();
        } else if (name == "inner") {
          c.inner_len = as_index();
        } else if (name == "alpha") {
          c.alpha = value;
        } else if constexpr (std::is_same_v<C, BaselineConfig>) {
          if (name == "lr") c.lr = value;
          else if (name == "delta0") c.delta0 = value;
          else if (name == "gamma1") c.gamma1 = value;
          else if (name == "gamma2") c.gamma2 = value;
          else if (name == "momentum") c.momentum = value;
          else throw ConfigError("unknown grid axis: " + name);
        } else {
          throw ConfigError("grid axis " + name + " does not apply to TRSVR");
        }
      },
      cfg.method);
}

namespace {

double cell_score(const GridSpec& grid, const ExperimentResult& r) {
  const auto& recs = r.trajectory.records;
  if (r.trajectory.diverged || recs.empty()) return std::numeric_limits<double>::infinity();
  switch (grid.metric) {
    case GridMetric::FinalGap: return recs.back().optimality_gap;
    case GridMetric::FinalGradNormSq: return recs.back().grad_norm_sq;
    case GridMetric::PassesToThreshold:
      for (const auto& m : recs) {
        if (m.optimality_gap <= grid.threshold) return m.effective_passes;
      }
      return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

GridResult grid_search(const RunConfig& base, const GridSpec& grid) {
  if (grid.axes.empty()) throw ConfigError("grid needs at least one axis");
  for (const auto& axis : grid.axes) {
    if (axis.values.empty()) throw ConfigError("grid axis " + axis.name + " is empty");
  }
  const auto problem = build_problem(base.source, base.objective);

  // One reference optimum shared by every cell.
  RunConfig shared = base;
  shared.output_path.clear();
  if (!shared.f_star && shared.compute_fstar && grid.metric != GridMetric::FinalGradNormSq) {
    const Vector x0 = initial_point(base.init, problem->objective().dim(), base.init_seed);
    shared.f_star = compute_fstar(problem->objective(), x0).f_star;
  }
  if (grid.metric == GridMetric::FinalGradNormSq && !shared.f_star) shared.compute_fstar = false;

  GridResult result;
  std::vector<std::size_t> pos(grid.axes.size(), 0);
  while (true) {
    GridCell cell;
    cell.config = shared;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      const double v = grid.axes[a].values[pos[a]];
      cell.assignment.emplace_back(grid.axes[a].name, v);
      apply_axis(cell.config, grid.axes[a].name, v);
    }
    const ExperimentResult r = run_on_problem(*problem, cell.config);
    cell.diverged = r.trajectory.diverged;
    cell.score = cell_score(grid, r);
    result.ranked.push_back(std::move(cell));

    std::size_t a = 0;
    for (; a < pos.size(); ++a) {
      if (++pos[a] < grid.axes[a].values.size()) break;
      pos[a] = 0;
    }
    if (a == pos.size()) break;
  }

  const bool all_diverged = std::all_of(result.ranked.begin(), result.ranked.end(),
                                        [](const GridCell& c) { return c.diverged; });
  if (all_diverged) throw GridError("every grid cell diverged");

  std::sort(result.ranked.begin(), result.ranked.end(), [](const GridCell& x, const GridCell& y) {
    if (x.diverged != y.diverged) return !x.diverged;
    if (x.score != y.score) {
      if (std::isnan(x.score)) return false;
      if (std::isnan(y.score)) return true;
      return x.score < y.score;
    }
    return x.assignment < y.assignment;
  });
  return result;
}

std::string grid_to_csv(const GridResult& result) {
  std::string out = "rank";
  if (!result.ranked.empty()) {
    for (const auto& [name, v] : result.ranked.front().assignment) out += ',' + name;
  }
  out += ",score,diverged\n";
  Index rank = 1;
  for (const auto& cell : result.ranked) {
    out += std::to_string(rank++);
    for (const auto& [name, v] : cell.assignment) out += ',' + format17(v);
    out += ',' + format17(cell.score) + ',' + (cell.diverged ? "true" : "false") + '\n';
  }
  return out;
}

// Budget sweeps -----------------------------------------------------------------

std::vector<BudgetCell> sweep_budget(Index budget, const std::vector<Index>& batch_sizes,
                                     const std::string& regime) {
  if (budget < 1) throw ConfigError("budget must be positive");
  std::vector<BudgetCell> cells;
  for (Index b : batch_sizes) {
    if (b < 1 || budget % b != 0) {
      throw ConfigError("batch size " + std::to_string(b) + " does not divide the budget " +
                        std::to_string(budget));
    }
    cells.push_back({regime, b, budget / b});
  }
  return cells;
}

std::vector<BudgetCell> sensitivity_regimes() {
  constexpr Index kBudget = 40000;
  std::vector<BudgetCell> cells = sweep_budget(kBudget, {500, 800, 1000, 2000, 4000}, "large_batch");
  for (auto& c : sweep_budget(kBudget, {100, 200, 400}, "balanced")) cells.push_back(c);
  for (auto& c : sweep_budget(kBudget, {10, 20, 40, 50}, "high_frequency")) cells.push_back(c);
  return cells;
}

}  // namespace trsvr

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "trsvr/baselines.hpp"
#include "trsvr/dataset.hpp"
#include "trsvr/synthetic.hpp"
#include "trsvr/trsvr.hpp"

namespace trsvr {

inline constexpr const char* kSchemaVersion = "trsvr/1";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SyntheticSource {
  SyntheticParams params;
  bool operator==(const SyntheticSource&) const = default;
};

struct LibsvmSource {
  std::string path;
  bool operator==(const LibsvmSource&) const = default;
};

using ProblemSource = std::variant<SyntheticSource, LibsvmSource>;
using MethodConfig = std::variant<TrsvrConfig, BaselineConfig>;

enum class InitKind { Zeros, Normal };

struct RunConfig {
  ProblemSource source = SyntheticSource{};
  ObjectiveSpec objective;
  MethodConfig method = TrsvrConfig{};
  /// These three override the same-named fields of the method config.
  Index epochs = 10;
  std::uint64_t seed = 0;
  Index record_every = 0;
  /// File stem, or a directory when it ends in '/'. Empty writes nothing.
  std::string output_path;
  /// Reference optimum; computed when absent and compute_fstar is set.
  std::optional<double> f_star;
  bool compute_fstar = true;
  InitKind init = InitKind::Normal;
  std::uint64_t init_seed = 0;
  double lipschitz_radius = 10.0;
  /// Off writes wall_clock_s = 0 so repeated runs are byte-identical.
  bool timing = true;

  bool operator==(const RunConfig&) const = default;
};

std::string method_name(const MethodConfig& method);

/// Method config with the RunConfig-level epochs / seed / record_every applied.
MethodConfig resolved_method(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
std::string export_json(const RunConfig& cfg);
RunConfig parse_run_config(const std::string& text);

/// Owns the data and the objective view over it.
class Problem {
 public:
  Problem(Dataset data, const ObjectiveSpec& spec, std::optional<Vector> ground_truth = {});
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;

  const Dataset& data() const { return data_; }
  const LogisticObjective& objective() const { return objective_; }
  const std::optional<Vector>& ground_truth() const { return truth_; }

 private:
  Dataset data_;
  LogisticObjective objective_;
  std::optional<Vector> truth_;
};

std::unique_ptr<Problem> build_problem(const ProblemSource& source, const ObjectiveSpec& spec);
Vector initial_point(InitKind kind, Index dim, std::uint64_t seed);

struct FstarResult {
  double f_star = 0.0;
  /// |grad f| at the returned point.
  double certificate = 0.0;
  bool converged = false;
  /// "global" for convex objectives, "local_reference" otherwise.
  std::string label;
  Index iterations = 0;
};

struct FstarOptions {
  double grad_norm_sq_tol = 1e-24;
  Index max_iters = 10000;
  double delta0 = 1.0;
  int cg_max_iters = 500;
};

/// Deterministic trust region with the exact full Hessian from x0.
FstarResult compute_fstar(const FiniteSum& f, const Vector& x0, const FstarOptions& options = {});

struct ExperimentResult {
  Trajectory trajectory;
  std::optional<FstarResult> fstar;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  std::string f_star_label = "none";
  std::string csv_path;
  std::string json_path;
};

/// Builds the problem, runs the method, and writes CSV plus a JSON sidecar
/// when output_path is set. Diverged runs still write output.
ExperimentResult run_experiment(const RunConfig& cfg);

/// Runs on an already built problem (used by grids and sweeps).
ExperimentResult run_on_problem(const Problem& problem, const RunConfig& cfg);

std::string export_csv(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> parse_csv(const std::string& text);

/// Temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& contents);

// Grid search -----------------------------------------------------------------

struct GridAxis {
  /// alpha, lr, batch, inner, delta0, gamma1, gamma2, momentum
  std::string name;
  std::vector<double> values;
  bool operator==(const GridAxis&) const = default;
};

enum class GridMetric { FinalGap, FinalGradNormSq, PassesToThreshold };

struct GridSpec {
  std::vector<GridAxis> axes;
  GridMetric metric = GridMetric::FinalGap;
  /// Gap threshold for PassesToThreshold.
  double threshold = 1e-6;
};

/// count values log-spaced on [lo, hi].
std::vector<double> log_space(double lo, double hi, int count);

struct GridCell {
  std::vector<std::pair<std::string, double>> assignment;
  RunConfig config;
  double score = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

struct GridResult {
  /// Best first; diverged cells last.
  std::vector<GridCell> ranked;
  const GridCell& best() const { return ranked.front(); }
};

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void apply_axis(RunConfig& cfg, const std::string& name, double value);

/// Runs every cell; ties are broken lexicographically on the assignment.
/// Throws GridError when every cell diverged.
GridResult grid_search(const RunConfig& base, const GridSpec& grid);

std::string grid_to_csv(const GridResult& result);

// Budget sweeps -----------------------------------------------------------------

struct BudgetCell {
  std::string regime;
  Index batch_size = 0;
  Index inner_len = 0;
  bool operator==(const BudgetCell&) const = default;
};

/// One cell per batch size with S = budget / b; b must divide the budget.
std::vector<BudgetCell> sweep_budget(Index budget, const std::vector<Index>& batch_sizes,
                                     const std::string& regime = "");

/// Large-batch, balanced and high-frequency regimes at a per-epoch budget of 40000.
std::vector<BudgetCell> sensitivity_regimes();

}  // namespace trsvr

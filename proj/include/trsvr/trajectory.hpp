#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trsvr/estimator.hpp"
#include "trsvr/objective.hpp"

namespace trsvr {

/// One evaluation point on a convergence curve.
struct MetricsRecord {
  std::string method;
  std::uint64_t seed = 0;
  double epoch = 0.0;
  double effective_passes = 0.0;
  double wall_clock_s = 0.0;
  double f_value = 0.0;
  double grad_norm_sq = 0.0;
  double optimality_gap = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

/// Measures f and |grad f|^2 at record points. Measurement work is excluded
/// from both the eval counters and the wall clock.
class Recorder {
 public:
  Recorder(const FiniteSum& f, std::string method, std::uint64_t seed,
           double f_star = std::numeric_limits<double>::quiet_NaN());

  /// Appends a record unless effective passes did not advance. Returns false
  /// once the point is non-finite or f has blown up past the divergence limit.
  bool record(double epoch, const EvalCounter& counter, const Vector& x);

  bool diverged() const { return diverged_; }
  double f_star() const { return f_star_; }
  const std::vector<MetricsRecord>& records() const { return records_; }
  std::vector<MetricsRecord> take() { return std::move(records_); }

  /// f > f_0 + factor (1 + |f_0|) counts as divergence. Default 1e10.
  void set_divergence_factor(double factor) { divergence_factor_ = factor; }
  /// With timing off every wall_clock_s is 0, making output byte-reproducible.
  void set_timing(bool enabled) { timing_ = enabled; }

 private:
  using Clock = std::chrono::steady_clock;

  const FiniteSum* f_;
  std::string method_;
  std::uint64_t seed_;
  double f_star_;
  double divergence_factor_ = 1e10;
  bool diverged_ = false;
  bool timing_ = true;
  Clock::time_point start_;
  Clock::duration excluded_{};
  std::vector<MetricsRecord> records_;
};

struct OuterLoopStats {
  std::uint64_t component_grad_evals = 0;
  std::uint64_t hvp_probe_evals = 0;
  std::uint64_t cg_iters = 0;
  Index inner_steps = 0;
};

struct Trajectory {
  std::vector<MetricsRecord> records;
  Vector final_iterate;
  EvalCounter counters;
  /// First (k, s) at which the step estimate was exactly zero.
  std::optional<std::pair<Index, Index>> stationary_event;
  bool diverged = false;
  std::string diagnostic;
  /// Per outer loop (TRSVR, SVRG, SARAH) or per epoch otherwise.
  std::vector<OuterLoopStats> outer_loops;
  /// Trust-region radius per iteration for the radius-adaptive methods.
  std::vector<double> radii;
  Index cauchy_checks = 0;
  Index cauchy_violations = 0;
};

}  // namespace trsvr

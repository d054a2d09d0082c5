#pragma once

#include <functional>
#include <limits>

#include "trsvr/hessian.hpp"
#include "trsvr/tr_solver.hpp"
#include "trsvr/trajectory.hpp"

namespace trsvr {

/// Trust-region method with SVRG gradients and radius alpha |g_bar|.
struct TrsvrConfig {
  double alpha = 0.06;
  Index batch_size = 200;
  Index inner_len = 100;
  HessianMode hessian = HessianMode::EstH;
  int cg_max_iters = 200;
  FdStepRule fd;
  /// Outer-loop count.
  Index epochs = 10;
  std::uint64_t seed = 0;
  /// Inner steps between records; 0 means ceil(inner_len / 10).
  Index record_every = 0;
  /// Check the Cauchy-decrease bound at every inner step (uncounted work).
  bool verify_cauchy = true;
  /// Stop after the outer loop in which this many effective passes are reached.
  double max_passes = std::numeric_limits<double>::infinity();

  void validate(Index n) const;
  bool operator==(const TrsvrConfig&) const = default;
};

struct InnerStepInfo {
  Index k;
  Index s;
  const Vector& x;  // iterate before the step
  const Vector& g_bar;
  const SvrgReference& ref;
  const TrStep<double>& step;
  double radius;
  const EvalCounter& counter;
};

struct TrsvrHooks {
  std::function<void(const InnerStepInfo&)> on_inner_step;
};

Trajectory trsvr_run(const FiniteSum& f, const TrsvrConfig& config, const Vector& x0,
                     Recorder& recorder, const TrsvrHooks& hooks = {});

/// Records per inner step; ceil(S / 10) unless configured.
Index resolved_record_every(Index configured, Index steps_per_epoch);

}  // namespace trsvr

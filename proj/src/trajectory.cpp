#include "trsvr/trajectory.hpp"

#include <cmath>

namespace trsvr {

Recorder::Recorder(const FiniteSum& f, std::string method, std::uint64_t seed, double f_star)
    : f_(&f), method_(std::move(method)), seed_(seed), f_star_(f_star), start_(Clock::now()) {}

bool Recorder::record(double epoch, const EvalCounter& counter, const Vector& x) {
  const auto entered = Clock::now();
  const double passes = counter.effective_passes(f_->size());
  const bool finite = x.allFinite();

  if (records_.empty() || passes > records_.back().effective_passes || !finite) {
    MetricsRecord rec;
    rec.method = method_;
    rec.seed = seed_;
    rec.epoch = epoch;
    rec.effective_passes = passes;
    if (timing_) {
      rec.wall_clock_s = std::chrono::duration<double>(entered - start_ - excluded_).count();
    }
    if (finite) {
      rec.f_value = full_value(*f_, x);
      rec.grad_norm_sq = full_gradient(*f_, x).squaredNorm();
    } else {
      rec.f_value = std::numeric_limits<double>::quiet_NaN();
      rec.grad_norm_sq = std::numeric_limits<double>::quiet_NaN();
    }
    rec.optimality_gap = rec.f_value - f_star_;

    if (!std::isfinite(rec.f_value) || !std::isfinite(rec.grad_norm_sq)) {
      diverged_ = true;
    } else if (!records_.empty()) {
      const double f0 = records_.front().f_value;
      if (rec.f_value > f0 + divergence_factor_ * (1.0 + std::abs(f0))) diverged_ = true;
    }
    records_.push_back(std::move(rec));
  }
  excluded_ += Clock::now() - entered;
  return !diverged_;
}

}  // namespace trsvr

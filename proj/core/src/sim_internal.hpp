#pragma once

// Shared internals of the pathwise simulators (not installed).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ergo/model.hpp"
#include "ergo/rng.hpp"
#include "ergo/simulate.hpp"

namespace ergo::detail {

struct StepPlan {
  std::int64_t n_steps = 0;
  std::vector<std::int64_t> checkpoint_steps;
  std::vector<double> checkpoint_times;
};

inline StepPlan plan_steps(const SimConfig& cfg) {
  StepPlan plan;
  plan.n_steps = std::llround(cfg.horizon / cfg.dt);
  for (double t : cfg.checkpoints) {
    std::int64_t k = std::llround(t / cfg.dt);
    k = std::clamp<std::int64_t>(k, 0, plan.n_steps);
    plan.checkpoint_steps.push_back(k);
    plan.checkpoint_times.push_back(static_cast<double>(k) * cfg.dt);
  }
  return plan;
}

// Drift/noise move over a fragment of length h.  Consumes at most one normal.
class Mover {
 public:
  Mover(const ModelSpec& model, const SimConfig& cfg)
      : model_(model), exact_(cfg.integrator == Integrator::ExactLinear) {
    const double xref = model.domain.contains(0.0) ? 0.0 : model.domain.lo;
    if (exact_) {
      if (!model.linear_drift || !model.sigma_constant)
        throw validation_error("ExactLinear integrator needs linear drift and constant sigma");
      c_ = model.linear_drift->first;
      b_ = model.linear_drift->second;
      sigma0_ = model.sigma.value(xref);
    }
    // Pure-drift models skip the normal draw entirely.
    sigma_zero_ = model.sigma_constant && model.sigma.value(xref) == 0.0;
  }

  bool pure_drift() const { return sigma_zero_; }

  // Deterministic part of the move (used when the noise term is shared).
  double mean(double x, double h) const {
    if (exact_) {
      if (b_ != 0.0) {
        const double e = std::exp(b_ * h);
        return x * e + c_ / b_ * (e - 1.0);
      }
      return x + c_ * h;
    }
    return x + model_.g.value(x) * h;
  }

  // Standard deviation multiplying one shared N(0,1) draw.
  double noise_sd(double x, double h) const {
    if (sigma_zero_) return 0.0;
    if (exact_) {
      if (b_ != 0.0) {
        const double e2 = std::exp(2.0 * b_ * h);
        return std::sqrt(std::max(0.0, sigma0_ * (e2 - 1.0) / b_));
      }
      return std::sqrt(2.0 * sigma0_ * h);
    }
    return std::sqrt(2.0 * std::max(0.0, model_.sigma.value(x)) * h);
  }

  double advance(double x, double h, rng_stream& rng) const {
    if (h <= 0.0) return x;
    const double m = mean(x, h);
    const double sd = noise_sd(x, h);
    return sd > 0.0 ? m + sd * rng.normal() : m;
  }

 private:
  const ModelSpec& model_;
  bool exact_ = false;
  double c_ = 0.0, b_ = 0.0, sigma0_ = 0.0;
  bool sigma_zero_ = false;
};

inline double clip_to(const Interval& domain, double x, std::int64_t& clips) {
  if (x < domain.lo) {
    ++clips;
    return domain.lo;
  }
  if (x > domain.hi) {
    ++clips;
    return domain.hi;
  }
  return x;
}

[[noreturn]] inline void bad_state(std::int64_t path, double t) {
  throw numeric_error("non-finite state at path " + std::to_string(path) + ", time " +
                      std::to_string(t));
}

}  // namespace ergo::detail

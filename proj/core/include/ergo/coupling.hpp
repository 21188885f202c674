#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ergo/model.hpp"
#include "ergo/simulate.hpp"

namespace ergo {

// Paired trajectories: |X-Y|, exact state equality, and both marginals.
struct CouplingOutcome {
  std::vector<double> checkpoint_times;
  std::int64_t n_paths = 0;
  std::vector<double> dist;          // row-major n_paths x checkpoints
  std::vector<std::uint8_t> equal;   // X == Y as states (exact for PDMPs after sticking)
  std::vector<double> values_x;
  std::vector<double> values_y;
  double x0 = 0.0, y0 = 0.0;  // starting pair
  std::uint64_t seed = 0;
  std::int64_t clip_count = 0;

  size_t idx(std::int64_t path, size_t k) const {
    return static_cast<size_t>(path) * checkpoint_times.size() + k;
  }
  std::vector<double> dist_column(size_t k) const;
};

struct FkEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double effective_sample_size = 0.0;
  std::int64_t n_paths = 0;
};

// Both copies share the Brownian increments, the jump clock, the thinning
// uniform u (jump iff u <= r(state)/rbar, so both jump whenever u is below the
// smaller rate) and the jump mark Theta.  Each marginal is distributed exactly
// as simulate_ensemble.  Unless allow_unvalidated, the model must pass one of
// the validate_monotone condition sets.
CouplingOutcome couple_synchronous(const ModelSpec& model, double x0, double y0,
                                   const SimConfig& cfg, bool allow_unvalidated = false);

// Total-variation coupling for pure-jump models (sigma == 0): deterministic
// flow between events, one event clock at rate r(x) v r(y), a coin B with
// P(B=0) = (r^r)/(r v r); when both jump, the pair is drawn from a maximal
// coupling of the two jump kernels and sticks forever once equal; when B=1
// only the higher-rate copy jumps.  Needs the exact flow (linear drift), a
// declared rate monotonicity, and a kernel family with a closed-form maximal
// coupling (Dirac-mixture multiplicative or shifted-exponential).
CouplingOutcome couple_tv_sticking(const ModelSpec& model, double x0, double y0,
                                   const SimConfig& cfg);

// Gradient of the semigroup via the weighted auxiliary process:
//   (P_t f)'(x) = E[ f'(Y_t) exp(-int_0^t V(Y_s) ds) | Y_0 = x ],
// where Y has drift sigma' + g, second-order coefficient sigma, a jump channel
// at rate r(y)E[H] sending y -> H~y with H~ size-biased, and a channel at rate
// -r'(y) y E[1-H] sending y to a uniform point of [hy, y] with h (1-h)-biased.
// Multiplicative jumps with non-increasing r only (both channel rates must be
// nonnegative; violations raise errors).  The weight uses left-endpoint V.
FkEstimate fk_gradient(const ModelSpec& model, const std::function<double(double)>& f_prime,
                       double x, double t, const SimConfig& cfg);

// Oracle for the same quantity: central difference of P_t f by common random
// numbers, mean of (f(Y_t) - f(X_t))/(2 delta) over couple_synchronous paths
// started from x -+ delta.
FkEstimate semigroup_gradient_fd(const ModelSpec& model, const std::function<double(double)>& f,
                                 double x, double delta, double t, const SimConfig& cfg);

}  // namespace ergo

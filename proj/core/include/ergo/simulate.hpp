#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergo/model.hpp"

namespace ergo {

// ExactThinning reproduces the jump times exactly under a dominating rate;
// PerStepBernoulli jumps once per Euler step with p = 1 - exp(-r(x)dt).
enum class JumpScheme { ExactThinning, PerStepBernoulli };

// ExactLinear uses the closed-form Gaussian transition; it requires
// g(x) = c + b*x and constant sigma and removes all time-discretization bias.
enum class Integrator { EulerMaruyama, ExactLinear };

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::vector<double> checkpoints;  // sorted, in [0, horizon]; snapped to the dt grid
  std::int64_t n_paths = 1;
  std::uint64_t seed = 0;
  JumpScheme jump_scheme = JumpScheme::PerStepBernoulli;
  Integrator integrator = Integrator::EulerMaruyama;
  int threads = 1;
  std::optional<double> thinning_bound;  // overrides model.rate_global_bound
};

// Throws validation_error; horizon must sit on the dt grid.
void validate_config(const SimConfig& cfg);

// Initial condition: a point mass or one pre-drawn sample per path.
struct InitialLaw {
  std::vector<double> sample_list;  // empty means Dirac
  double x0 = 0.0;

  static InitialLaw dirac(double x) {
    InitialLaw l;
    l.x0 = x;
    return l;
  }
  static InitialLaw samples(std::vector<double> s) {
    InitialLaw l;
    l.sample_list = std::move(s);
    return l;
  }
  double draw(std::int64_t path) const {
    return sample_list.empty() ? x0 : sample_list.at(static_cast<size_t>(path));
  }
};

struct PathEnsemble {
  std::vector<double> checkpoint_times;  // snapped k*dt values
  std::int64_t n_paths = 0;
  std::vector<double> values;  // row-major n_paths x checkpoint count
  std::uint64_t seed = 0;
  std::string scheme;          // provenance text (scheme, integrator, dt)
  std::int64_t clip_count = 0; // boundary clips across all paths and steps

  double value(std::int64_t path, size_t k) const {
    return values[static_cast<size_t>(path) * checkpoint_times.size() + k];
  }
  std::vector<double> column(size_t k) const;
};

// Pathwise simulation: integrator move each dt step, then the jump draw from
// the moved state using the pre-move rate.  One counter RNG stream per path,
// so results are bit-identical for any thread count.
PathEnsemble simulate_ensemble(const ModelSpec& model, const InitialLaw& initial,
                               const SimConfig& cfg);

// Post-jump chain x -> H * R_inv(R(x) + E), E unit exponential, H ~ jump_h.
// states holds n_paths rows of (n_steps + 1) entries including the start.
// Two calls with the same seed share the (E, H) sequence path-by-path, which
// is how paired-chain contraction checks are run.
struct ChainEnsemble {
  std::int64_t n_paths = 0;
  int n_steps = 0;
  std::vector<double> states;  // row-major n_paths x (n_steps + 1)
  std::uint64_t seed = 0;

  double value(std::int64_t path, int step) const {
    return states[static_cast<size_t>(path) * (n_steps + 1) + step];
  }
  std::vector<double> column(int step) const;
};

ChainEnsemble simulate_embedded_chain(const std::function<double(double)>& R,
                                      const std::function<double(double)>& R_inv,
                                      const Dist1D& jump_h, double x0, int n_steps,
                                      std::int64_t n_paths, std::uint64_t seed,
                                      int threads = 1);

// Y_t = int_0^t exp(-L_s) sqrt(2) dB_s with L compound Poisson (rate r_const,
// increments -ln H).  L's jump times are exact; steps are split at them so the
// integrand is exact between jumps.  Y_0 = 0.
PathEnsemble simulate_levy_integral(double r_const, const Dist1D& jump_h, const SimConfig& cfg);

}  // namespace ergo

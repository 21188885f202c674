#include "ergo/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "ergo/parallel.hpp"
#include "sim_internal.hpp"

namespace ergo {

using detail::bad_state;
using detail::clip_to;
using detail::Mover;
using detail::plan_steps;
using detail::StepPlan;

namespace {

bool on_grid(double t, double dt) {
  const double k = std::round(t / dt);
  return std::fabs(k * dt - t) <= 1e-9 * std::max(1.0, std::fabs(t));
}

}  // namespace

void validate_config(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw validation_error("dt must be positive");
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon))
    throw validation_error("horizon must be positive");
  if (!on_grid(cfg.horizon, cfg.dt))
    throw validation_error("horizon must be an integer multiple of dt");
  if (cfg.n_paths < 1) throw validation_error("n_paths must be >= 1");
  if (cfg.checkpoints.empty()) throw validation_error("checkpoints must be non-empty");
  if (!std::is_sorted(cfg.checkpoints.begin(), cfg.checkpoints.end()))
    throw validation_error("checkpoints must be sorted");
  const double slack = 1e-9 * std::max(1.0, cfg.horizon);
  for (double t : cfg.checkpoints)
    if (t < -slack || t > cfg.horizon + slack)
      throw validation_error("checkpoint outside [0, horizon]");
  if (cfg.threads < 1) throw validation_error("threads must be >= 1");
  if (cfg.thinning_bound && !(*cfg.thinning_bound > 0.0))
    throw validation_error("thinning_bound must be positive");
}

std::vector<double> PathEnsemble::column(size_t k) const {
  std::vector<double> col(static_cast<size_t>(n_paths));
  for (std::int64_t p = 0; p < n_paths; ++p) col[static_cast<size_t>(p)] = value(p, k);
  return col;
}

std::vector<double> ChainEnsemble::column(int step) const {
  std::vector<double> col(static_cast<size_t>(n_paths));
  for (std::int64_t p = 0; p < n_paths; ++p) col[static_cast<size_t>(p)] = value(p, step);
  return col;
}

PathEnsemble simulate_ensemble(const ModelSpec& model, const InitialLaw& initial,
                               const SimConfig& cfg) {
  validate_config(cfg);
  if (!initial.sample_list.empty() &&
      initial.sample_list.size() < static_cast<size_t>(cfg.n_paths))
    throw validation_error("initial sample list shorter than n_paths");

  double rbar = 0.0;
  if (cfg.jump_scheme == JumpScheme::ExactThinning && !model.no_jumps) {
    if (cfg.thinning_bound)
      rbar = *cfg.thinning_bound;
    else if (model.rate_global_bound)
      rbar = *model.rate_global_bound;
    else
      throw validation_error("ExactThinning needs a dominating rate bound");
    if (!(rbar > 0.0)) throw validation_error("dominating rate bound must be positive");
  }

  const StepPlan plan = plan_steps(cfg);
  const Mover mover(model, cfg);
  const size_t n_checks = plan.checkpoint_steps.size();

  PathEnsemble out;
  out.checkpoint_times = plan.checkpoint_times;
  out.n_paths = cfg.n_paths;
  out.values.resize(static_cast<size_t>(cfg.n_paths) * n_checks);
  out.seed = cfg.seed;
  out.scheme = std::string(cfg.jump_scheme == JumpScheme::ExactThinning ? "exact_thinning"
                                                                        : "per_step_bernoulli") +
               "/" +
               (cfg.integrator == Integrator::ExactLinear ? "exact_linear" : "euler_maruyama") +
               " dt=" + std::to_string(cfg.dt);

  std::atomic<std::int64_t> clip_total{0};
  const bool thinning = cfg.jump_scheme == JumpScheme::ExactThinning && !model.no_jumps;

  parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t p) {
    rng_stream rng(cfg.seed, static_cast<std::uint64_t>(p));
    std::int64_t clips = 0;
    double x = initial.draw(p);
    if (!model.domain.contains(x)) throw validation_error("initial state outside the domain");

    auto record = [&](std::int64_t step) {
      for (size_t c = 0; c < n_checks; ++c)
        if (plan.checkpoint_steps[c] == step)
          out.values[static_cast<size_t>(p) * n_checks + c] = x;
    };
    record(0);

    double t_event = thinning ? rng.exponential(rbar) : 0.0;
    for (std::int64_t k = 1; k <= plan.n_steps; ++k) {
      const double t0 = static_cast<double>(k - 1) * cfg.dt;
      const double t1 = static_cast<double>(k) * cfg.dt;
      if (thinning) {
        double pos = t0;
        while (t_event < t1) {
          x = mover.advance(x, t_event - pos, rng);
          const double r = model.rate.value(x);
          if (r > rbar * (1.0 + 1e-9))
            throw numeric_error("thinning bound violated: r(" + std::to_string(x) + ") = " +
                                std::to_string(r) + " > " + std::to_string(rbar));
          if (rng.uniform() * rbar <= r) {
            x = model.jump.target(x, rng.uniform());
            x = clip_to(model.domain, x, clips);
          }
          pos = t_event;
          t_event += rng.exponential(rbar);
        }
        x = mover.advance(x, t1 - pos, rng);
      } else {
        const double r0 = model.no_jumps ? 0.0 : model.rate.value(x);
        x = mover.advance(x, cfg.dt, rng);
        if (r0 > 0.0) {
          const double p_jump = -std::expm1(-r0 * cfg.dt);
          if (rng.uniform() < p_jump) x = model.jump.target(x, rng.uniform());
        }
      }
      x = clip_to(model.domain, x, clips);
      if (!std::isfinite(x)) bad_state(p, t1);
      record(k);
    }
    clip_total.fetch_add(clips, std::memory_order_relaxed);
  });

  out.clip_count = clip_total.load();
  return out;
}

ChainEnsemble simulate_embedded_chain(const std::function<double(double)>& R,
                                      const std::function<double(double)>& R_inv,
                                      const Dist1D& jump_h, double x0, int n_steps,
                                      std::int64_t n_paths, std::uint64_t seed, int threads) {
  if (n_steps < 1) throw validation_error("embedded chain needs n_steps >= 1");
  if (n_paths < 1) throw validation_error("embedded chain needs n_paths >= 1");
  if (x0 < 0.0) throw validation_error("embedded chain needs x0 >= 0");

  // R must be strictly increasing with a consistent inverse where the chain lives.
  const auto grid = uniform_grid(std::min(0.0, x0), x0 + 10.0, 65);
  double prev = R(grid.front());
  for (size_t i = 1; i < grid.size(); ++i) {
    const double cur = R(grid[i]);
    if (!(cur > prev))
      throw validation_error("embedded chain: R is not strictly increasing at x = " +
                             std::to_string(grid[i]));
    prev = cur;
  }
  for (double x : grid) {
    const double back = R_inv(R(x));
    if (std::fabs(back - x) > 1e-10 * (1.0 + std::fabs(x)))
      throw validation_error("embedded chain: R_inv(R(x)) != x at x = " + std::to_string(x));
  }

  ChainEnsemble out;
  out.n_paths = n_paths;
  out.n_steps = n_steps;
  out.states.resize(static_cast<size_t>(n_paths) * (n_steps + 1));
  out.seed = seed;

  parallel_for(n_paths, threads, [&](std::int64_t p) {
    rng_stream rng(seed, static_cast<std::uint64_t>(p));
    double x = x0;
    double* row = &out.states[static_cast<size_t>(p) * (n_steps + 1)];
    row[0] = x;
    for (int n = 1; n <= n_steps; ++n) {
      const double e = rng.exponential(1.0);
      const double h = jump_h.sample(rng);
      x = h * R_inv(R(x) + e);
      if (!std::isfinite(x)) bad_state(p, static_cast<double>(n));
      row[n] = x;
    }
  });
  return out;
}

PathEnsemble simulate_levy_integral(double r_const, const Dist1D& jump_h, const SimConfig& cfg) {
  if (!(r_const > 0.0)) throw validation_error("levy integral needs r_const > 0");
  if (jump_h.min_support() <= 0.0 || jump_h.max_support() > 1.0 + 1e-12)
    throw validation_error("levy integral factors must have support in (0,1]");
  validate_config(cfg);

  const StepPlan plan = plan_steps(cfg);
  const size_t n_checks = plan.checkpoint_steps.size();

  PathEnsemble out;
  out.checkpoint_times = plan.checkpoint_times;
  out.n_paths = cfg.n_paths;
  out.values.resize(static_cast<size_t>(cfg.n_paths) * n_checks);
  out.seed = cfg.seed;
  out.scheme = "levy_integral exact-jump-times dt=" + std::to_string(cfg.dt);

  parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t p) {
    rng_stream rng(cfg.seed, static_cast<std::uint64_t>(p));
    double y = 0.0;
    double log_weight = 0.0;  // -L_s, so the integrand is exp(log_weight)
    double weight = 1.0;      // exp(log_weight), refreshed only when L jumps
    double t_jump = rng.exponential(r_const);

    auto record = [&](std::int64_t step) {
      for (size_t c = 0; c < n_checks; ++c)
        if (plan.checkpoint_steps[c] == step)
          out.values[static_cast<size_t>(p) * n_checks + c] = y;
    };
    record(0);

    for (std::int64_t k = 1; k <= plan.n_steps; ++k) {
      const double t1 = static_cast<double>(k) * cfg.dt;
      double pos = static_cast<double>(k - 1) * cfg.dt;
      while (t_jump < t1) {
        const double h = t_jump - pos;
        if (h > 0.0) y += weight * std::sqrt(2.0 * h) * rng.normal();
        log_weight += std::log(jump_h.sample(rng));
        weight = std::exp(log_weight);
        pos = t_jump;
        t_jump += rng.exponential(r_const);
      }
      const double h = t1 - pos;
      if (h > 0.0) y += weight * std::sqrt(2.0 * h) * rng.normal();
      if (!std::isfinite(y)) bad_state(p, t1);
      record(k);
    }
  });
  return out;
}

}  // namespace ergo

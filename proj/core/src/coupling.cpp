#include "ergo/coupling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "ergo/curvature.hpp"
#include "ergo/parallel.hpp"
#include "sim_internal.hpp"

namespace ergo {

using detail::bad_state;
using detail::clip_to;
using detail::Mover;
using detail::plan_steps;
using detail::StepPlan;

namespace {

std::vector<double> monotone_grid(const ModelSpec& model) {
  const double lo = std::isfinite(model.domain.lo) ? model.domain.lo : -25.0;
  double hi = std::isfinite(model.domain.hi) ? model.domain.hi : lo + 50.0;
  if (hi <= lo) hi = lo + 1.0;
  return uniform_grid(lo, hi, 101);
}

struct PairRecorder {
  CouplingOutcome* out;
  const StepPlan* plan;
  std::int64_t path;

  void at(std::int64_t step, double x, double y) const {
    const size_t n_checks = plan->checkpoint_steps.size();
    for (size_t c = 0; c < n_checks; ++c) {
      if (plan->checkpoint_steps[c] != step) continue;
      const size_t i = static_cast<size_t>(path) * n_checks + c;
      out->dist[i] = std::fabs(x - y);
      out->equal[i] = (x == y) ? 1 : 0;
      out->values_x[i] = x;
      out->values_y[i] = y;
    }
  }
};

CouplingOutcome make_outcome(const StepPlan& plan, const SimConfig& cfg, double x0, double y0) {
  CouplingOutcome out;
  out.checkpoint_times = plan.checkpoint_times;
  out.n_paths = cfg.n_paths;
  out.x0 = x0;
  out.y0 = y0;
  const size_t total = static_cast<size_t>(cfg.n_paths) * plan.checkpoint_steps.size();
  out.dist.assign(total, 0.0);
  out.equal.assign(total, 0);
  out.values_x.assign(total, 0.0);
  out.values_y.assign(total, 0.0);
  out.seed = cfg.seed;
  return out;
}

// Exact flow x -> x(h) for linear drift g(x) = c + b x (PDMP segments).
struct LinearFlow {
  double c = 0.0, b = 0.0;
  double operator()(double x, double h) const {
    if (h <= 0.0) return x;
    if (b == 0.0) return x + c * h;
    const double e = std::exp(b * h);
    return x * e + c / b * (e - 1.0);
  }
};

struct MixAtom {
  double z, w;
};

// Jump-target law K(x, .) of a multiplicative Dirac/mixture kernel, with
// coincident positions merged.
std::vector<MixAtom> kernel_atoms(const Dist1D& dist, double x) {
  std::vector<MixAtom> atoms;
  if (dist.kind == Dist1D::Kind::Dirac) {
    atoms.push_back({dist.a * x, 1.0});
  } else {
    for (const auto& [w, v] : dist.atoms) atoms.push_back({v * x, w});
    std::sort(atoms.begin(), atoms.end(), [](const MixAtom& l, const MixAtom& r) {
      return l.z < r.z;
    });
    std::vector<MixAtom> merged;
    for (const auto& a : atoms) {
      if (!merged.empty() && std::fabs(a.z - merged.back().z) <= 1e-12 * (1.0 + std::fabs(a.z)))
        merged.back().w += a.w;
      else
        merged.push_back(a);
    }
    atoms = std::move(merged);
  }
  return atoms;
}

double walk_atoms(const std::vector<MixAtom>& atoms, double u) {
  double acc = 0.0;
  for (const auto& a : atoms) {
    acc += a.w;
    if (u <= acc) return a.z;
  }
  return atoms.back().z;
}

// Maximal coupling of the two finite jump-target laws: returns the new pair.
std::pair<double, double> maximal_mixture_pair(const std::vector<MixAtom>& p,
                                               const std::vector<MixAtom>& q, rng_stream& rng) {
  std::vector<MixAtom> overlap, res_p = p, res_q = q;
  double m = 0.0;
  for (auto& ap : res_p) {
    for (auto& aq : res_q) {
      if (std::fabs(ap.z - aq.z) <= 1e-12 * (1.0 + std::fabs(ap.z))) {
        const double o = std::min(ap.w, aq.w);
        if (o > 0.0) {
          overlap.push_back({ap.z, o});
          ap.w -= o;
          aq.w -= o;
          m += o;
        }
      }
    }
  }
  const double u = rng.uniform();
  if (u < m) {
    const double z = walk_atoms(overlap, u);
    return {z, z};
  }
  const double ux = rng.uniform() * (1.0 - m);
  const double uy = rng.uniform() * (1.0 - m);
  return {walk_atoms(res_p, ux), walk_atoms(res_q, uy)};
}

}  // namespace

std::vector<double> CouplingOutcome::dist_column(size_t k) const {
  std::vector<double> col(static_cast<size_t>(n_paths));
  for (std::int64_t p = 0; p < n_paths; ++p) col[static_cast<size_t>(p)] = dist[idx(p, k)];
  return col;
}

CouplingOutcome couple_synchronous(const ModelSpec& model, double x0, double y0,
                                   const SimConfig& cfg, bool allow_unvalidated) {
  validate_config(cfg);
  if (!model.domain.contains(x0) || !model.domain.contains(y0))
    throw validation_error("coupling start outside the domain");
  if (!allow_unvalidated) {
    const auto rep = validate_monotone(model, monotone_grid(model));
    if (!rep.bullets_pass && !rep.mirror_pass && !rep.structural_monotone)
      throw validation_error("model failed monotonicity validation (" + rep.note +
                             "); pass allow_unvalidated to couple anyway");
  }

  double rbar = 0.0;
  const bool thinning = cfg.jump_scheme == JumpScheme::ExactThinning && !model.no_jumps;
  if (thinning) {
    if (cfg.thinning_bound)
      rbar = *cfg.thinning_bound;
    else if (model.rate_global_bound)
      rbar = *model.rate_global_bound;
    else
      throw validation_error("ExactThinning needs a dominating rate bound");
  }

  const StepPlan plan = plan_steps(cfg);
  const Mover mover(model, cfg);
  CouplingOutcome out = make_outcome(plan, cfg, x0, y0);
  std::atomic<std::int64_t> clip_total{0};

  parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t p) {
    rng_stream rng(cfg.seed, static_cast<std::uint64_t>(p));
    std::int64_t clips = 0;
    double x = x0, y = y0;
    const PairRecorder rec{&out, &plan, p};
    rec.at(0, x, y);

    // Shared noise: one N(0,1) scales both state-dependent deviations.
    auto advance_pair = [&](double h) {
      if (h <= 0.0) return;
      const double mx = mover.mean(x, h);
      const double my = mover.mean(y, h);
      const double sx = mover.noise_sd(x, h);
      const double sy = mover.noise_sd(y, h);
      if (sx > 0.0 || sy > 0.0) {
        const double xi = rng.normal();
        x = mx + sx * xi;
        y = my + sy * xi;
      } else {
        x = mx;
        y = my;
      }
    };

    double t_event = thinning ? rng.exponential(rbar) : 0.0;
    for (std::int64_t k = 1; k <= plan.n_steps; ++k) {
      const double t0 = static_cast<double>(k - 1) * cfg.dt;
      const double t1 = static_cast<double>(k) * cfg.dt;
      if (thinning) {
        double pos = t0;
        while (t_event < t1) {
          advance_pair(t_event - pos);
          const double rx = model.rate.value(x);
          const double ry = model.rate.value(y);
          if (std::max(rx, ry) > rbar * (1.0 + 1e-9))
            throw numeric_error("thinning bound violated: rate " +
                                std::to_string(std::max(rx, ry)) + " > " + std::to_string(rbar));
          const double u = rng.uniform() * rbar;
          const bool jx = u <= rx, jy = u <= ry;
          if (jx || jy) {
            const double theta = rng.uniform();
            if (jx) x = clip_to(model.domain, model.jump.target(x, theta), clips);
            if (jy) y = clip_to(model.domain, model.jump.target(y, theta), clips);
          }
          pos = t_event;
          t_event += rng.exponential(rbar);
        }
        advance_pair(t1 - pos);
      } else {
        const double rx0 = model.no_jumps ? 0.0 : model.rate.value(x);
        const double ry0 = model.no_jumps ? 0.0 : model.rate.value(y);
        advance_pair(cfg.dt);
        if (rx0 > 0.0 || ry0 > 0.0) {
          const double u = rng.uniform();
          const bool jx = u < -std::expm1(-rx0 * cfg.dt);
          const bool jy = u < -std::expm1(-ry0 * cfg.dt);
          if (jx || jy) {
            const double theta = rng.uniform();
            if (jx) x = model.jump.target(x, theta);
            if (jy) y = model.jump.target(y, theta);
          }
        }
      }
      x = clip_to(model.domain, x, clips);
      y = clip_to(model.domain, y, clips);
      if (!std::isfinite(x) || !std::isfinite(y)) bad_state(p, t1);
      rec.at(k, x, y);
    }
    clip_total.fetch_add(clips, std::memory_order_relaxed);
  });

  out.clip_count = clip_total.load();
  return out;
}

CouplingOutcome couple_tv_sticking(const ModelSpec& model, double x0, double y0,
                                   const SimConfig& cfg) {
  validate_config(cfg);
  if (!model.domain.contains(x0) || !model.domain.contains(y0))
    throw validation_error("coupling start outside the domain");
  const double xref = model.domain.contains(0.0) ? 0.0 : model.domain.lo;
  if (!model.sigma_constant || model.sigma.value(xref) != 0.0)
    throw validation_error("sticking coupling needs a pure-jump model (sigma == 0)");
  if (!model.linear_drift)
    throw validation_error("sticking coupling needs the exact linear flow (g = c + b x)");
  if (model.rate_monotonicity == RateMonotonicity::Unknown)
    throw validation_error("sticking coupling needs a declared rate monotonicity");
  const bool mult = model.jump.kernel_family == JumpLaw::KernelFamily::DiracMixtureMult;
  const bool shifted_exp = model.jump.kernel_family == JumpLaw::KernelFamily::ShiftedExponential;
  if (!mult && !shifted_exp)
    throw validation_error("jump kernel without a closed-form maximal coupling");

  const LinearFlow flow{model.linear_drift->first, model.linear_drift->second};
  const StepPlan plan = plan_steps(cfg);
  CouplingOutcome out = make_outcome(plan, cfg, x0, y0);
  std::atomic<std::int64_t> clip_total{0};

  parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t p) {
    rng_stream rng(cfg.seed, static_cast<std::uint64_t>(p));
    std::int64_t clips = 0;
    double x = x0, y = y0;
    const PairRecorder rec{&out, &plan, p};
    rec.at(0, x, y);

    auto handle_event = [&](double rx, double ry) {
      const double rmin = std::min(rx, ry);
      const double rmax = std::max(rx, ry);
      const bool both = (rx == ry) || (rng.uniform() * rmax < rmin);
      if (both) {
        if (shifted_exp) {
          const double lam = model.jump.kernel_lambda;
          const double lo = std::min(x, y), hi = std::max(x, y);
          const double delta = hi - lo;
          const double stick_p = std::exp(-lam * delta);  // 1 - d_TV of the two kernels
          if (rng.uniform() < stick_p) {
            const double z = hi + rng.exponential(lam);
            x = y = z;
          } else {
            // Residuals of the maximal coupling: the lower copy lands in
            // (lo, hi] with a truncated exponential, the upper restarts fresh.
            const double w =
                -std::log1p(rng.uniform() * std::expm1(-lam * delta)) / lam;
            const double lower_new = lo + w;
            const double upper_new = hi + rng.exponential(lam);
            if (x <= y) {
              x = lower_new;
              y = upper_new;
            } else {
              x = upper_new;
              y = lower_new;
            }
          }
        } else {
          const auto [nx, ny] =
              maximal_mixture_pair(kernel_atoms(model.jump.dist, x),
                                   kernel_atoms(model.jump.dist, y), rng);
          x = nx;
          y = ny;
        }
      } else {
        const double theta = rng.uniform();
        if (rx > ry)
          x = model.jump.target(x, theta);
        else
          y = model.jump.target(y, theta);
      }
      x = clip_to(model.domain, x, clips);
      y = clip_to(model.domain, y, clips);
    };

    for (std::int64_t k = 1; k <= plan.n_steps; ++k) {
      // Monotone rate along a monotone flow: the window supremum of
      // r(x_t) v r(y_t) is attained at a window endpoint, so the thinning
      // dominator below is exact.  It is refreshed after every candidate,
      // which also covers rate changes caused by accepted jumps.
      double pos = 0.0;
      while (true) {
        const double rest = cfg.dt - pos;
        const double xe = flow(x, rest);
        const double ye = flow(y, rest);
        const double dom = std::max(std::max(model.rate.value(x), model.rate.value(y)),
                                    std::max(model.rate.value(xe), model.rate.value(ye)));
        if (dom <= 0.0) {
          x = xe;
          y = ye;
          break;
        }
        const double e = rng.exponential(dom);
        if (e >= rest) {
          x = xe;
          y = ye;
          break;
        }
        pos += e;
        x = flow(x, e);
        y = flow(y, e);
        const double rx = model.rate.value(x);
        const double ry = model.rate.value(y);
        if (std::max(rx, ry) > dom * (1.0 + 1e-9))
          throw numeric_error("sticking coupling dominator violated at path " +
                              std::to_string(p));
        if (rng.uniform() * dom <= std::max(rx, ry)) handle_event(rx, ry);
      }
      if (!std::isfinite(x) || !std::isfinite(y)) bad_state(p, static_cast<double>(k) * cfg.dt);
      rec.at(k, x, y);
    }
    clip_total.fetch_add(clips, std::memory_order_relaxed);
  });

  out.clip_count = clip_total.load();
  return out;
}

FkEstimate fk_gradient(const ModelSpec& model, const std::function<double(double)>& f_prime,
                       double x, double t, const SimConfig& cfg) {
  if (!f_prime) throw validation_error("fk_gradient needs an f' evaluator");
  if (!model.domain.contains(x)) throw validation_error("fk_gradient start outside the domain");
  SimConfig local = cfg;
  local.horizon = t;
  local.checkpoints = {t};
  validate_config(local);
  if (!model.no_jumps && model.jump.kind != JumpLaw::Kind::Multiplicative)
    throw validation_error("fk_gradient needs a multiplicative jump law");

  // Channel B carries rate -r'(y) * J(y); a positive r' would make it negative.
  {
    const double w = 20.0 * (1.0 + std::fabs(x));
    const double lo = std::max(model.domain.lo, x - w);
    const double hi = std::min(model.domain.hi, x + w);
    for (double z : uniform_grid(lo, std::max(hi, lo + 1e-6), 101))
      if (model.rate.deriv(z) > 1e-9)
        throw validation_error("fk_gradient needs non-increasing r: r'(" + std::to_string(z) +
                               ") > 0");
  }

  const bool exact = local.integrator == Integrator::ExactLinear;
  const Mover mover(model, local);  // valid for Y too: constant sigma makes sigma' vanish
  const std::int64_t n_steps = std::llround(t / local.dt);
  const double m1 = model.no_jumps ? 1.0 : model.jump.dist.mean();

  std::vector<double> vals(static_cast<size_t>(local.n_paths));
  std::vector<double> weights(static_cast<size_t>(local.n_paths));

  parallel_for(local.n_paths, local.threads, [&](std::int64_t p) {
    rng_stream rng(local.seed, static_cast<std::uint64_t>(p));
    std::int64_t clips = 0;
    double y = x;
    double log_w = 0.0;
    for (std::int64_t k = 1; k <= n_steps; ++k) {
      log_w -= potential_v(model, y) * local.dt;
      double rate_a = 0.0, rate_b = 0.0;
      if (!model.no_jumps) {
        rate_a = model.rate.value(y) * m1;
        rate_b = -model.rate.deriv(y) * model.jump.jint(y);
        if (rate_b < -1e-9 * (1.0 + std::fabs(y)))
          throw numeric_error("fk_gradient channel rate negative at y = " + std::to_string(y));
        rate_b = std::max(0.0, rate_b);
      }
      if (exact) {
        y = mover.advance(y, local.dt, rng);
      } else {
        const double drift = model.sigma.deriv(y) + model.g.value(y);
        const double sd = std::sqrt(2.0 * std::max(0.0, model.sigma.value(y)) * local.dt);
        y += drift * local.dt + (sd > 0.0 ? sd * rng.normal() : 0.0);
      }
      if (rate_a > 0.0 && rng.uniform() < -std::expm1(-rate_a * local.dt)) {
        y *= model.jump.dist.sample_size_biased(rng);  // size-biased factor
      }
      if (rate_b > 0.0 && rng.uniform() < -std::expm1(-rate_b * local.dt)) {
        const double h = model.jump.dist.sample_one_minus_biased(rng);
        y *= h + rng.uniform() * (1.0 - h);  // uniform point of [hy, y]
      }
      y = clip_to(model.domain, y, clips);
      if (!std::isfinite(y) || !std::isfinite(log_w)) bad_state(p, static_cast<double>(k) * local.dt);
    }
    const double w = std::exp(log_w);
    weights[static_cast<size_t>(p)] = w;
    vals[static_cast<size_t>(p)] = f_prime(y) * w;
  });

  FkEstimate est;
  est.n_paths = local.n_paths;
  double sum = 0.0, sum_w = 0.0, sum_w2 = 0.0;
  for (size_t i = 0; i < vals.size(); ++i) {
    sum += vals[i];
    sum_w += weights[i];
    sum_w2 += weights[i] * weights[i];
  }
  est.value = sum / static_cast<double>(local.n_paths);
  double ss = 0.0;
  for (double v : vals) ss += (v - est.value) * (v - est.value);
  est.std_error = local.n_paths > 1
                      ? std::sqrt(ss / (static_cast<double>(local.n_paths) *
                                        static_cast<double>(local.n_paths - 1)))
                      : 0.0;
  est.effective_sample_size = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
  return est;
}

FkEstimate semigroup_gradient_fd(const ModelSpec& model, const std::function<double(double)>& f,
                                 double x, double delta, double t, const SimConfig& cfg) {
  if (!f) throw validation_error("semigroup_gradient_fd needs an f evaluator");
  if (!(delta > 0.0)) throw validation_error("semigroup_gradient_fd needs delta > 0");
  if (!model.domain.contains(x - delta) || !model.domain.contains(x + delta))
    throw validation_error("x +- delta leaves the domain");
  SimConfig local = cfg;
  local.horizon = t;
  local.checkpoints = {t};
  const CouplingOutcome out = couple_synchronous(model, x - delta, x + delta, local);

  FkEstimate est;
  est.n_paths = out.n_paths;
  est.effective_sample_size = static_cast<double>(out.n_paths);
  const size_t k = out.checkpoint_times.size() - 1;
  double sum = 0.0;
  std::vector<double> vals(static_cast<size_t>(out.n_paths));
  for (std::int64_t p = 0; p < out.n_paths; ++p) {
    const double v = (f(out.values_y[out.idx(p, k)]) - f(out.values_x[out.idx(p, k)])) /
                     (2.0 * delta);
    vals[static_cast<size_t>(p)] = v;
    sum += v;
  }
  est.value = sum / static_cast<double>(out.n_paths);
  double ss = 0.0;
  for (double v : vals) ss += (v - est.value) * (v - est.value);
  est.std_error = out.n_paths > 1 ? std::sqrt(ss / (static_cast<double>(out.n_paths) *
                                                    static_cast<double>(out.n_paths - 1)))
                                  : 0.0;
  return est;
}

}  // namespace ergo

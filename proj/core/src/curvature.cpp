#include "ergo/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ergo {

double potential_v(const ModelSpec& model, double x) {
  if (!model.domain.contains(x)) throw validation_error("potential_v: x outside the domain");
  if (!model.g.deriv || !model.rate.deriv)
    throw validation_error("potential_v needs g' and r' evaluators");
  const double m1 = model.jump.m1(x);
  const double j = model.jump.jint(x);
  return -model.g.deriv(x) + model.rate.value(x) * (1.0 - m1) - model.rate.deriv(x) * j;
}

CurvatureReport curvature_rho(const ModelSpec& model, const Interval& window, int n_grid,
                              bool tail_asserted) {
  if (n_grid < 2) throw validation_error("curvature_rho needs n_grid >= 2");
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi))
    throw validation_error("curvature_rho needs a finite window");
  if (window.lo < model.domain.lo || window.hi > model.domain.hi)
    throw validation_error("curvature_rho window outside the model domain");

  CurvatureReport rep;
  rep.grid = uniform_grid(window.lo, window.hi, n_grid);
  rep.v_values.reserve(rep.grid.size());
  for (double x : rep.grid) rep.v_values.push_back(potential_v(model, x));

  auto it = std::min_element(rep.v_values.begin(), rep.v_values.end());
  rep.rho = *it;
  rep.argmin = rep.grid[static_cast<size_t>(it - rep.v_values.begin())];
  const double vmax = *std::max_element(rep.v_values.begin(), rep.v_values.end());
  rep.v_constant = (vmax - rep.rho) < 1e-12 * (1.0 + std::fabs(vmax));
  rep.tail_flag = tail_asserted;
  return rep;
}

double subordinated_curvature(double rho, double drift_b,
                              const std::vector<std::pair<double, double>>& levy_atoms) {
  if (!std::isfinite(rho)) throw validation_error("subordinated_curvature needs finite rho");
  double psi = drift_b * rho;
  for (const auto& [w, z] : levy_atoms) {
    if (w <= 0.0 || z <= 0.0)
      throw validation_error("subordinated_curvature atoms need positive mass and size");
    psi += w * (1.0 - std::exp(-rho * z));
  }
  return psi;
}

namespace {

struct WindowExtrema {
  double r_lower, r_prime_upper, g_prime_upper;
};

WindowExtrema window_extrema(const ModelSpec& model, const Interval& window, int n_grid) {
  if (n_grid < 2) throw validation_error("tv bound needs n_grid >= 2");
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi))
    throw validation_error("tv bound needs a finite window");
  WindowExtrema e;
  e.r_lower = std::numeric_limits<double>::infinity();
  e.r_prime_upper = -std::numeric_limits<double>::infinity();
  e.g_prime_upper = -std::numeric_limits<double>::infinity();
  for (double x : uniform_grid(window.lo, window.hi, n_grid)) {
    if (!model.domain.contains(x)) continue;
    e.r_lower = std::min(e.r_lower, model.rate.value(x));
    e.r_prime_upper = std::max(e.r_prime_upper, model.rate.deriv(x));
    e.g_prime_upper = std::max(e.g_prime_upper, model.g.deriv(x));
  }
  return e;
}

void check_tv_hypotheses(const ModelSpec& model, const Interval& window, const WindowExtrema& e) {
  for (double x : uniform_grid(window.lo, window.hi, 33))
    if (model.domain.contains(x) && std::fabs(model.sigma.value(x)) > 1e-12)
      throw validation_error("tv bound applies to pure-jump models only (sigma must vanish)");
  if (!(e.r_lower > std::max(0.0, e.g_prime_upper)))
    throw validation_error("rate too small: need inf r > max(0, sup g') on the window");
}

}  // namespace

std::pair<TvBoundConstants, double> tv_bound(const ModelSpec& model, const Interval& window,
                                             int n_grid, double kappa, double c_kernel,
                                             double w0, double t) {
  if (kappa <= 0.0) throw validation_error("tv_bound needs kappa > 0");
  if (c_kernel < 0.0 || w0 < 0.0) throw validation_error("tv_bound needs c_kernel, w0 >= 0");
  const WindowExtrema e = window_extrema(model, window, n_grid);
  check_tv_hypotheses(model, window, e);

  TvBoundConstants c;
  c.kappa = kappa;
  c.r_lower = e.r_lower;
  c.g_prime_upper = e.g_prime_upper;
  c.r_prime_upper = e.r_prime_upper;
  c.c_kernel = c_kernel;
  c.w0 = w0;
  c.theta = kappa * e.r_lower / (kappa + e.r_lower);

  const double a =
      (c_kernel + e.r_prime_upper / e.r_lower) * e.r_lower / (e.r_lower - e.g_prime_upper) * w0;
  const double denom = e.r_lower + kappa;
  c.k_mu_nu = std::pow(kappa * a, e.r_lower / denom) +
              std::pow(kappa, kappa / denom) * std::pow(a, (e.r_lower + 2.0 * kappa) / denom);
  return {c, c.k_mu_nu * std::exp(-c.theta * t)};
}

double tv_local_bound(const ModelSpec& model, const Interval& window, int n_grid, double x,
                      double y, double t, double c_kernel) {
  if (c_kernel < 0.0) throw validation_error("tv_local_bound needs c_kernel >= 0");
  const WindowExtrema e = window_extrema(model, window, n_grid);
  check_tv_hypotheses(model, window, e);
  return std::exp(-t * e.r_lower) + std::fabs(x - y) * (c_kernel + e.r_prime_upper / e.r_lower) *
                                        e.r_lower / (e.r_lower - e.g_prime_upper);
}

}  // namespace ergo

#pragma once

#include <utility>
#include <vector>

#include "ergo/model.hpp"

namespace ergo {

// V on a grid and its infimum rho (the contraction rate in transport distance).
struct CurvatureReport {
  std::vector<double> grid;
  std::vector<double> v_values;
  double rho = 0.0;       // min of v_values
  double argmin = 0.0;    // grid point attaining it
  bool v_constant = false;  // max-min < 1e-12*(1+|max|): rho is exact, not a window artifact
  bool tail_flag = false;   // caller asserts V is monotone beyond the window
};

// Constants of the total-variation decay bound for monotone PDMPs.
struct TvBoundConstants {
  double theta = 0.0;          // decay rate kappa*r_lower/(kappa + r_lower)
  double k_mu_nu = 0.0;        // prefactor
  double kappa = 0.0;          // transport-curvature lower bound supplied by the caller
  double r_lower = 0.0;        // inf r over the window
  double g_prime_upper = 0.0;  // sup g' over the window
  double r_prime_upper = 0.0;  // sup r' over the window
  double c_kernel = 0.0;       // TV-Lipschitz constant of the jump kernel
  double w0 = 0.0;             // transport distance between the initial laws
};

// V(x) = -g'(x) + r(x)(1 - m1(x)) - r'(x)*J(x), with
// m1(x) = int_0^1 d/dx F(x,theta) dtheta and J(x) = int_0^1 (x - F(x,theta)) dtheta.
double potential_v(const ModelSpec& model, double x);

// Evaluates V on a uniform grid over the window; rho = min.  tail_asserted is
// recorded verbatim (the window infimum is only global modulo that assertion).
CurvatureReport curvature_rho(const ModelSpec& model, const Interval& window, int n_grid,
                              bool tail_asserted = false);

// psi(rho) = b*rho + sum_i w_i (1 - exp(-rho*z_i)): contraction rate of the
// process subordinated by a driftful compound-Poisson clock.
double subordinated_curvature(double rho, double drift_b,
                              const std::vector<std::pair<double, double>>& levy_atoms);

// Total-variation decay d_TV(mu P_t, nu P_t) <= K * exp(-theta*t) for PDMPs
// (sigma == 0) with r_lower > max(0, g_prime_upper) over the window:
//   theta = kappa*r_lower/(kappa + r_lower)
//   K = (kappa*A)^{r_lower/(r_lower+kappa)}
//       + kappa^{kappa/(r_lower+kappa)} * A^{(r_lower+2kappa)/(r_lower+kappa)}
//   A = (c_kernel + r_prime_upper/r_lower) * r_lower/(r_lower - g_prime_upper) * w0
// Extrema of r, r', g' are grid extrema over the window.
std::pair<TvBoundConstants, double> tv_bound(const ModelSpec& model, const Interval& window,
                                             int n_grid, double kappa, double c_kernel,
                                             double w0, double t);

// One-step local estimate:
//   d_TV(delta_x P_t, delta_y P_t)
//     <= exp(-t*r_lower) + |x-y|*(c_kernel + r_prime_upper/r_lower)
//                              * r_lower/(r_lower - g_prime_upper).
double tv_local_bound(const ModelSpec& model, const Interval& window, int n_grid, double x,
                      double y, double t, double c_kernel);

}  // namespace ergo

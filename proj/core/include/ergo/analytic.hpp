#pragma once

#include <functional>
#include <vector>

#include "ergo/model.hpp"

namespace ergo {

struct EigenResult {
  double lambda = 0.0;              // smallest eigenvalue of the truncated operator
  std::vector<double> grid;         // uniform points, window endpoints included
  std::vector<double> eigenvector;  // L2-normalized (trapezoid weight), zero at the walls
  double residual = 0.0;            // ||T v - lambda v||_2 / ||v||_2 on the interior grid
};

// Stationary raw moments m_0..m_n_max of dY = sqrt(2) dB plus multiplicative
// kicks Y -> H Y at constant rate r. Recursion from integrating the generator
// against x^n: m_0 = 1, m_1 = 0, m_n = n(n-1) m_{n-2} / (r kappa_n) with
// kappa_n = 1 - E[H^n]. Odd moments vanish; kappa_n = 0 for a needed even n
// means the moment is infinite and raises validation_error.
std::vector<double> levy_integral_moments(double r_const,
                                          const std::function<double(int)>& h_moment,
                                          int n_max);

// The invariant-density series of the embedded chain X_{n+1} = h R_inv(R(X_n) + E_n)
// with R(x) = a x^(alpha+1)/(alpha+1) comes in two forms. Verbatim keeps the
// published display (whose k-indexed numerator h^{-(alpha+1)(n+1)} does not
// depend on k, so the inner product collapses to an n-th power); its term-wise
// integrals grow without bound, so it fails the normalization gate and is kept
// only behind this flag. Normalized is the hypoexponential resolution of
// R(X) = sum_{j>=1} q^j E_j, q = h^(alpha+1), which integrates to one.
enum class DensityVariant { Normalized, Verbatim };

// Density at x >= 0, truncated at n_terms series terms, accumulated in signed
// log-space (the coefficients alternate and grow like q^{-n^2/2}). When
// tail_bound is non-null it receives a bound on the dropped tail: a geometric
// bound from the first dropped term when the term ratio has fallen below one,
// +infinity when truncation stopped before the decaying regime.
double tcp_embedded_invariant_density(double a, double alpha, double h, double x,
                                      int n_terms,
                                      DensityVariant variant = DensityVariant::Normalized,
                                      double* tail_bound = nullptr);

// Distribution function of the normalized variant:
// F(x) = 1 - sum_j c_j exp(-q^{-j} R(x)), c_j the hypoexponential weights.
double tcp_embedded_invariant_cdf(double a, double alpha, double h, double x,
                                  int n_terms = 64);

// E[H^p]^{1/p}: one-step p-Wasserstein contraction factor of the embedded chain.
double embedded_contraction_factor(const std::function<double(double)>& h_moment,
                                   double p);

// Ground state of -u'' + W u on the window with Dirichlet walls, where
// W = q''/2 + (q')^2/4 is the ground-state-form potential of the overdamped
// Langevin generator with invariant density exp(-q). Standard second
// differences; smallest eigenvalue by bisection on the Sturm sign-change
// count of the symmetric tridiagonal matrix; eigenvector by inverse iteration.
EigenResult schrodinger_ground_state(const std::function<double(double)>& q_prime,
                                     const std::function<double(double)>& q_second,
                                     Interval window, int n_grid);

// Gradient-decay rate of the Langevin diffusion with potential q: the bottom
// eigenvalue from schrodinger_ground_state. Notes to stderr (without failing)
// when q'' >= 0 across the window, since the convexity lower bound already
// yields a rate there.
double langevin_rate(const QPotential& q, Interval window, int n_grid);

}  // namespace ergo

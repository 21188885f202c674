#include "ergo/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace ergo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log prod_{j>=1} (1 - q^j), q in (0,1)
double log_pochhammer(double q) {
  double acc = 0.0, qj = q;
  while (qj > 1e-30) {
    acc += std::log1p(-qj);
    qj *= q;
  }
  return acc;
}

// log(q^{-t} - 1) for t > 0 without overflow
double log_expm1(double t) { return t < 700.0 ? std::log(std::expm1(t)) : t; }

struct SeriesTerm {
  double log_abs;
  int sign;
};

// Signed log-sum-exp; also reports the largest term magnitude for a
// cancellation floor.
double signed_sum(const std::vector<SeriesTerm>& terms, double* max_abs) {
  double m = -kInf;
  for (const auto& t : terms) m = std::max(m, t.log_abs);
  if (max_abs) *max_abs = std::isfinite(m) ? std::exp(m) : 0.0;
  if (!std::isfinite(m)) return 0.0;
  double s = 0.0;
  for (const auto& t : terms)
    if (std::isfinite(t.log_abs)) s += t.sign * std::exp(t.log_abs - m);
  return s * std::exp(m);
}

void check_density_params(double a, double alpha, double h, double x, int n_terms) {
  if (!(a > 0.0)) throw validation_error("embedded density needs a > 0");
  if (!(alpha > -1.0)) throw validation_error("embedded density needs alpha > -1");
  if (!(h > 0.0 && h < 1.0)) throw validation_error("embedded density needs h in (0,1)");
  if (n_terms < 1) throw validation_error("embedded density needs n_terms >= 1");
  if (!std::isfinite(x) || x < 0.0)
    throw validation_error("embedded density needs finite x >= 0");
}

}  // namespace

std::vector<double> levy_integral_moments(double r_const,
                                          const std::function<double(int)>& h_moment,
                                          int n_max) {
  if (!(r_const > 0.0)) throw validation_error("levy_integral_moments needs r > 0");
  if (n_max < 0) throw validation_error("levy_integral_moments needs n_max >= 0");
  std::vector<double> m(static_cast<size_t>(n_max) + 1, 0.0);
  m[0] = 1.0;
  for (int n = 2; n <= n_max; n += 2) {
    const double ehn = h_moment(n);
    if (!std::isfinite(ehn) || ehn < -1e-12 || ehn > 1.0 + 1e-12)
      throw validation_error("levy_integral_moments: E[H^n] must lie in [0,1]");
    const double kappa = 1.0 - ehn;
    if (kappa <= 1e-15)
      throw validation_error("levy_integral_moments: kappa_n = 1 - E[H^n] vanishes; moment is infinite");
    m[static_cast<size_t>(n)] =
        static_cast<double>(n) * (n - 1) * m[static_cast<size_t>(n) - 2] / (r_const * kappa);
  }
  return m;
}

double tcp_embedded_invariant_density(double a, double alpha, double h, double x,
                                      int n_terms, DensityVariant variant,
                                      double* tail_bound) {
  check_density_params(a, alpha, h, x, n_terms);
  if (x == 0.0) {
    if (alpha > 0.0) {
      if (tail_bound) *tail_bound = 0.0;
      return 0.0;
    }
    throw validation_error("embedded density at x = 0 needs alpha > 0");
  }

  const double log_inv_q = -(alpha + 1.0) * std::log(h);  // q = h^(alpha+1)
  const double q = std::exp(-log_inv_q);
  const double log_r = std::log(a) + (alpha + 1.0) * std::log(x) - std::log(alpha + 1.0);
  const double base_log = -log_pochhammer(q) + std::log(a) + alpha * std::log(x);

  // term n: base * coef_n * exp(-lambda_{n+1} R) with sign (-1)^n, where
  // coef_n = lambda_{n+1} / prod_{k<=n}|1-q^{-k}|        (Normalized)
  //        = lambda_{n+1}^n / prod_{k<=n}|1-q^{-k}|      (Verbatim display)
  auto term_log_at = [&](int n, double log_prod_n) {
    const double lam_log = (n + 1) * log_inv_q;
    const double lam_r_log = lam_log + log_r;
    const double lam_r = lam_r_log > 700.0 ? kInf : std::exp(lam_r_log);
    const double coef_log =
        variant == DensityVariant::Normalized ? lam_log : n * lam_log;
    return base_log + coef_log - log_prod_n - lam_r;
  };

  std::vector<SeriesTerm> terms;
  terms.reserve(static_cast<size_t>(n_terms));
  double log_prod = 0.0;  // log prod_{k=1}^{n} |1 - q^{-k}|
  for (int n = 0; n < n_terms; ++n) {
    terms.push_back({term_log_at(n, log_prod), n % 2 == 0 ? 1 : -1});
    log_prod += log_expm1((n + 1) * log_inv_q);
  }

  if (tail_bound) {
    // Walk dropped terms until consecutive magnitudes verifiably halve, then
    // close with the geometric remainder.
    double acc = 0.0, prev = -1.0;
    bool closed = false;
    double lp = log_prod;
    for (int n = n_terms; n < n_terms + 64; ++n) {
      const double cur_log = term_log_at(n, lp);
      lp += log_expm1((n + 1) * log_inv_q);
      const double cur = std::isfinite(cur_log) ? std::exp(cur_log) : 0.0;
      if (!std::isfinite(cur)) break;
      acc += cur;
      if (prev >= 0.0 && cur <= 0.5 * prev) {
        acc += cur;  // remainder of a series with term ratios <= 1/2
        closed = true;
        break;
      }
      prev = cur;
    }
    *tail_bound = closed ? acc : kInf;
  }

  double max_abs = 0.0;
  double value = signed_sum(terms, &max_abs);
  if (!std::isfinite(value)) throw numeric_error("embedded density series overflowed");
  if (variant == DensityVariant::Normalized && value < 0.0) {
    if (value > -1e-9 * std::max(max_abs, 1e-300)) return 0.0;  // cancellation floor
    throw numeric_error("embedded density series summed negative beyond roundoff");
  }
  return value;
}

double tcp_embedded_invariant_cdf(double a, double alpha, double h, double x,
                                  int n_terms) {
  check_density_params(a, alpha, h, x, n_terms);
  if (x == 0.0) return 0.0;

  const double log_inv_q = -(alpha + 1.0) * std::log(h);
  const double q = std::exp(-log_inv_q);
  const double big_r = a * std::pow(x, alpha + 1.0) / (alpha + 1.0);

  // F(x) = 1 - sum_{j>=1} c_j exp(-q^{-j} R), c_1 = 1/(q;q)_inf,
  // c_{j+1} = c_j / (1 - q^{-j}); the weights decay super-exponentially.
  double c = std::exp(-log_pochhammer(q));
  double s = 0.0;
  for (int j = 1; j <= n_terms; ++j) {
    const double lam_log = j * log_inv_q;
    if (lam_log + std::log(big_r) < 700.0) s += c * std::exp(-std::exp(lam_log) * big_r);
    c /= 1.0 - std::exp(std::min(lam_log, 700.0));
    if (c == 0.0) break;
  }
  double f = 1.0 - s;
  if (f < -1e-9 || f > 1.0 + 1e-9)
    throw numeric_error("embedded chain distribution function left [0,1]");
  return std::clamp(f, 0.0, 1.0);
}

double embedded_contraction_factor(const std::function<double(double)>& h_moment,
                                   double p) {
  if (!(p >= 1.0)) throw validation_error("embedded_contraction_factor needs p >= 1");
  const double m = h_moment(p);
  if (!std::isfinite(m) || m < 0.0)
    throw validation_error("embedded_contraction_factor: E[H^p] must be finite and >= 0");
  return std::pow(m, 1.0 / p);
}

EigenResult schrodinger_ground_state(const std::function<double(double)>& q_prime,
                                     const std::function<double(double)>& q_second,
                                     Interval window, int n_grid) {
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi) || !(window.hi > window.lo))
    throw validation_error("ground state needs a bounded window with lo < hi");
  if (n_grid < 100) throw validation_error("ground state needs n_grid >= 100");

  const int m = n_grid - 2;  // interior unknowns; walls carry Dirichlet zeros
  const double s = (window.hi - window.lo) / (n_grid - 1);
  const double e = -1.0 / (s * s);

  EigenResult out;
  out.grid.resize(static_cast<size_t>(n_grid));
  for (int i = 0; i < n_grid; ++i) out.grid[static_cast<size_t>(i)] = window.lo + i * s;

  std::vector<double> d(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double xi = out.grid[static_cast<size_t>(i) + 1];
    const double w = 0.5 * q_second(xi) + 0.25 * q_prime(xi) * q_prime(xi);
    if (!std::isfinite(w))
      throw validation_error("ground state potential must be finite on the window");
    d[static_cast<size_t>(i)] = 2.0 / (s * s) + w;
  }

  // Sturm sequence: negatives among the LDL^T pivots of T - mu I count the
  // eigenvalues below mu.
  auto count_below = [&](double mu) {
    int cnt = 0;
    double piv = 0.0;
    for (int i = 0; i < m; ++i) {
      piv = d[static_cast<size_t>(i)] - mu - (i > 0 ? (e * e) / piv : 0.0);
      if (piv == 0.0) piv = 1e-300;
      if (piv < 0.0) ++cnt;
    }
    return cnt;
  };

  double lo_ev = d[0], hi_ev = d[0];
  for (double di : d) {
    lo_ev = std::min(lo_ev, di);
    hi_ev = std::max(hi_ev, di);
  }
  lo_ev += 2.0 * e - 1.0;  // e < 0: Gershgorin radius 2|e|, padded
  hi_ev -= 2.0 * e - 1.0;
  while (hi_ev - lo_ev > 1e-14 * std::max(1.0, std::fabs(hi_ev))) {
    const double mid = 0.5 * (lo_ev + hi_ev);
    if (mid <= lo_ev || mid >= hi_ev) break;
    (count_below(mid) >= 1 ? hi_ev : lo_ev) = mid;
  }
  const double lambda_bisect = 0.5 * (lo_ev + hi_ev);

  // Inverse iteration at the certified eigenvalue; the nearly singular Thomas
  // solve amplifies exactly the wanted direction.
  std::vector<double> v(static_cast<size_t>(m), 1.0), cp(static_cast<size_t>(m)),
      rhs(static_cast<size_t>(m));
  for (int iter = 0; iter < 6; ++iter) {
    rhs = v;
    double piv = d[0] - lambda_bisect;
    if (std::fabs(piv) < 1e-300) piv = 1e-300;
    cp[0] = e / piv;
    v[0] = rhs[0] / piv;
    for (int i = 1; i < m; ++i) {
      piv = d[static_cast<size_t>(i)] - lambda_bisect - e * cp[static_cast<size_t>(i) - 1];
      if (std::fabs(piv) < 1e-300) piv = 1e-300;
      cp[static_cast<size_t>(i)] = e / piv;
      v[static_cast<size_t>(i)] =
          (rhs[static_cast<size_t>(i)] - e * v[static_cast<size_t>(i) - 1]) / piv;
    }
    for (int i = m - 2; i >= 0; --i)
      v[static_cast<size_t>(i)] -= cp[static_cast<size_t>(i)] * v[static_cast<size_t>(i) + 1];
    double norm = 0.0;
    for (double vi : v) norm += vi * vi;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw numeric_error("inverse iteration degenerated");
    for (double& vi : v) vi /= norm;
  }

  // Rayleigh refinement pins lambda to the computed eigenvector.
  auto apply = [&](const std::vector<double>& u, int i) {
    double r = d[static_cast<size_t>(i)] * u[static_cast<size_t>(i)];
    if (i > 0) r += e * u[static_cast<size_t>(i) - 1];
    if (i + 1 < m) r += e * u[static_cast<size_t>(i) + 1];
    return r;
  };
  double rq = 0.0, nrm2 = 0.0;
  for (int i = 0; i < m; ++i) {
    rq += v[static_cast<size_t>(i)] * apply(v, i);
    nrm2 += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
  }
  const double lambda = rq / nrm2;
  if (std::fabs(lambda - lambda_bisect) > 1e-7 * std::max(1.0, std::fabs(lambda)))
    throw numeric_error("eigenvalue refinement drifted from the certified bracket");

  double res2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double r = apply(v, i) - lambda * v[static_cast<size_t>(i)];
    res2 += r * r;
  }
  out.residual = std::sqrt(res2 / nrm2);
  if (!(out.residual < 1e-8))
    throw numeric_error("ground state residual above tolerance");

  double vmax = 0.0;
  for (double vi : v) vmax = std::max(vmax, std::fabs(vi));
  double sign_probe = 0.0;
  for (double vi : v) sign_probe += vi;
  if (sign_probe < 0.0)
    for (double& vi : v) vi = -vi;
  for (double vi : v)
    if (vi < -1e-10 * vmax)
      throw numeric_error("ground state changes sign: window too small for a positive eigenvector");

  // L2 normalization with the grid weight; far-tail entries may underflow to
  // zero, which the positivity check above tolerates.
  double mass = 0.0;
  for (double vi : v) mass += vi * vi * s;
  const double scale = 1.0 / std::sqrt(mass);
  out.eigenvector.assign(static_cast<size_t>(n_grid), 0.0);
  for (int i = 0; i < m; ++i)
    out.eigenvector[static_cast<size_t>(i) + 1] = std::max(v[static_cast<size_t>(i)], 0.0) * scale;
  out.lambda = lambda;
  return out;
}

double langevin_rate(const QPotential& q, Interval window, int n_grid) {
  bool convex = true;
  for (int i = 0; i < 65 && convex; ++i) {
    const double x = window.lo + (window.hi - window.lo) * i / 64.0;
    if (q.d2q(x) < 0.0) convex = false;
  }
  if (convex)
    std::cerr << "note: q'' >= 0 across the window; the convexity bound already "
                 "gives this decay rate\n";
  return schrodinger_ground_state(q.dq, q.d2q, window, n_grid).lambda;
}

}  // namespace ergo

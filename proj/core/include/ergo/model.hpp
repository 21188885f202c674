#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergo/errors.hpp"
#include "ergo/rng.hpp"

namespace ergo {

// State space: an interval of the real line, possibly unbounded.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x <= hi; }
  static Interval real() { return {}; }
  static Interval half_line() { return {0.0, std::numeric_limits<double>::infinity()}; }
};

// A smooth coefficient together with its user-supplied derivative.  Derivatives
// are never produced internally: the contraction-rate formulas need them exact.
struct ScalarField {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

ScalarField constant_field(double c);

// Checks deriv against a central finite difference of value at the given
// points (step 1e-5*(1+|x|)); returns the worst relative mismatch.
double scalar_field_deriv_mismatch(const ScalarField& f, const std::vector<double>& points);

enum class RateMonotonicity { Decreasing, Increasing, Constant, Unknown };

// Atom / uniform / finite-mixture-of-atoms distribution on a real interval,
// with closed-form power moments.  Used for multiplicative jump factors H on
// (0,1] and additive jump amounts on [0,inf).
struct Dist1D {
  enum class Kind { Dirac, Uniform, Mixture };

  Kind kind = Kind::Dirac;
  double a = 1.0, b = 1.0;                        // Dirac: point a; Uniform: [a,b]
  std::vector<std::pair<double, double>> atoms;   // Mixture: (weight, value), weights sum to 1

  static Dist1D dirac(double v);
  static Dist1D uniform(double a, double b);
  static Dist1D mixture(std::vector<std::pair<double, double>> atoms);

  double moment(double p) const;   // E[Z^p] for real p >= 0
  double mean() const { return moment(1.0); }
  double min_support() const;
  double max_support() const;

  // Quantile transform: maps u in (0,1) to a draw.  Simulation feeds the
  // shared jump mark through this so coupled copies use comonotone factors.
  double quantile(double u) const;
  double sample(rng_stream& rng) const { return quantile(rng.uniform()); }

  // Reweighted draws used by the derivative-process jump channels:
  // density proportional to z, and to (1-z), respectively.
  double sample_size_biased(rng_stream& rng) const;
  double sample_one_minus_biased(rng_stream& rng) const;
};

// Jump mechanism x -> F(x, theta), theta uniform on [0,1].
struct JumpLaw {
  enum class Kind { Multiplicative, AdditiveDown, General };
  // Kernel families with a closed-form maximal coupling, for the total
  // variation coupling; everything else is rejected there.
  enum class KernelFamily { DiracMixtureMult, ShiftedExponential, Other };

  Kind kind = Kind::Multiplicative;
  Dist1D dist;                                    // H (Multiplicative) or amount (AdditiveDown)
  std::function<double(double, double)> F;        // General: (x, theta) -> target
  std::function<double(double, double)> dxF;      // General: d/dx F(x, theta)
  // Closed-form first-moment data for General laws, when the model knows them;
  // without these the 64-point midpoint rule below is used.
  std::optional<std::function<double(double)>> analytic_m1;  // int d/dx F(x,.) dtheta
  std::optional<std::function<double(double)>> analytic_j;   // int x - F(x,.) dtheta
  KernelFamily kernel_family = KernelFamily::Other;
  double kernel_lambda = 0.0;                     // ShiftedExponential rate
  bool monotone_in_x = true;                      // asserts d/dx F >= 0

  static JumpLaw multiplicative(Dist1D h);
  static JumpLaw additive_down(Dist1D amount);
  static JumpLaw general(std::function<double(double, double)> F,
                         std::function<double(double, double)> dxF);

  // Jump target for mark theta; all kinds route through this.
  double target(double x, double theta) const;
  double dx_target(double x, double theta) const;

  // m1(x)   = int_0^1 d/dx F(x,theta) dtheta     (E[H] for multiplicative laws)
  // jint(x) = int_0^1 (x - F(x,theta)) dtheta    (mean displacement downward)
  // Quadrature fallback uses an n-point midpoint rule (default 64; the doubled
  // call is the documented convergence check).
  double m1(double x, int quad_points = 64) const;
  double jint(double x, int quad_points = 64) const;
};

// Full description of one model instance (all coefficients immutable and
// shareable across workers; evaluators must be pure).
struct ModelSpec {
  std::string id = "custom";
  Interval domain;
  ScalarField g;        // drift
  ScalarField sigma;    // second-order coefficient: generator term sigma*f''; SDE noise sqrt(2*sigma)
  ScalarField rate;     // jump intensity
  JumpLaw jump;
  RateMonotonicity rate_monotonicity = RateMonotonicity::Unknown;
  std::optional<double> rate_global_bound;  // dominating rate for exact thinning
  bool degenerate_jump = false;             // F(x,.) == x a.s.; accepted with this flag
  // Structure tags used to validate the exact-transition integrator:
  std::optional<std::pair<double, double>> linear_drift;  // g(x) = first + second*x
  bool sigma_constant = false;
  bool no_jumps = false;                    // rate identically zero
};

// Twice-differentiable potential for Kolmogorov-Langevin models.
struct QPotential {
  std::function<double(double)> q;
  std::function<double(double)> dq;
  std::function<double(double)> d2q;
};

// Model zoo ---------------------------------------------------------------

// dX = dt, multiplicative crashes x -> Hx at rate r(x); domain [0,inf).
ModelSpec make_tcp(ScalarField rate, Dist1D jump_h,
                   RateMonotonicity rate_monotonicity = RateMonotonicity::Unknown);

// Branching-with-catastrophes diffusion: g(x) = g_const*x, sigma(x) = s_const*x,
// multiplicative catastrophes at rate r(x); domain [0,inf).
ModelSpec make_feller_bt(double g_const, double s_const, ScalarField rate, Dist1D jump_h,
                         RateMonotonicity rate_monotonicity = RateMonotonicity::Unknown);

// Stock model: g(x) = -g_const*x, upward Exp(lambda) restocks at rate r(x)
// (must be non-decreasing); domain [0,inf).
ModelSpec make_storage(double g_const, double lambda, ScalarField rate,
                       RateMonotonicity rate_monotonicity = RateMonotonicity::Increasing);

// Ornstein-Uhlenbeck: sigma = 1, g = -mu*x, no jumps; domain R.
ModelSpec make_ou(double mu);

// Kolmogorov-Langevin: sigma = 1, g = -q'(x), no jumps; domain R.
ModelSpec make_langevin(const QPotential& q);

// Constant-rate multiplicative jumps over a unit diffusion; domain R.
ModelSpec make_levy_integral(double r_const, Dist1D jump_h);

// Structural-hypothesis diagnostics --------------------------------------

struct MonotonicityCheck {
  bool pass = false;
  double witness = 0.0;     // grid point where the condition fails (if it does)
  std::string detail;
};

struct MonotonicityReport {
  // Published sufficient conditions: r non-increasing, F(x,.) < x, F increasing in x.
  MonotonicityCheck rate_decreasing, jumps_down, jump_increasing_in_x;
  // Mirrored variant: r non-decreasing, F(x,.) > x, F increasing in x.
  MonotonicityCheck rate_increasing, jumps_up;
  bool bullets_pass = false;
  bool mirror_pass = false;
  // Set when neither bullet set holds but the jump structure itself keeps
  // ordered copies ordered (multiplicative factors in (0,1]).
  bool structural_monotone = false;
  std::string note;
};

MonotonicityReport validate_monotone(const ModelSpec& model, const std::vector<double>& grid);

// Model-level sanity: sigma >= 0 and rate >= 0 on a sampled grid, declared
// rate monotonicity consistent with r' on the grid.  Throws validation_error.
void validate_model(const ModelSpec& model, const std::vector<double>& grid);

// Uniform grid helper (n >= 2 points, both ends included).
std::vector<double> uniform_grid(double lo, double hi, int n);

// JSON interface ----------------------------------------------------------
//
// {"model": "tcp"|"feller_bt"|"storage"|"ou"|"langevin"|"levy_integral"|"custom", ...}
// Custom models take expression strings (grammar in expr.hpp) for g, g_prime,
// sigma, sigma_prime, rate, rate_prime plus a jump block and a domain.
ModelSpec model_from_json_text(const std::string& json_text);
ModelSpec model_from_json_file(const std::string& path);

// {"kind": "dirac", "value": v} | {"kind": "uniform", "a":, "b":} |
// {"kind": "mixture", "atoms": [[w, v], ...]}
Dist1D dist1d_from_json_text(const std::string& json_text);

}  // namespace ergo

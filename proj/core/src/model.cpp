#include "ergo/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ergo/expr.hpp"

namespace ergo {

namespace {

constexpr double kTol = 1e-12;

// Midpoint nodes used wherever the jump mark theta must be scanned
// (diagnostics and the quadrature fallback).
std::vector<double> theta_nodes(int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = (i + 0.5) / n;
  return t;
}

}  // namespace

ScalarField constant_field(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }};
}

double scalar_field_deriv_mismatch(const ScalarField& f, const std::vector<double>& points) {
  double worst = 0.0;
  for (double x : points) {
    const double h = 1e-5 * (1.0 + std::fabs(x));
    const double fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
    const double d = f.deriv(x);
    const double denom = std::max({1e-6, std::fabs(fd), std::fabs(d)});
    worst = std::max(worst, std::fabs(fd - d) / denom);
  }
  return worst;
}

// Dist1D ------------------------------------------------------------------

Dist1D Dist1D::dirac(double v) {
  Dist1D d;
  d.kind = Kind::Dirac;
  d.a = d.b = v;
  return d;
}

Dist1D Dist1D::uniform(double a, double b) {
  if (!(a < b)) throw validation_error("uniform distribution needs a < b");
  Dist1D d;
  d.kind = Kind::Uniform;
  d.a = a;
  d.b = b;
  return d;
}

Dist1D Dist1D::mixture(std::vector<std::pair<double, double>> atoms) {
  if (atoms.empty()) throw validation_error("mixture needs at least one atom");
  double total = 0.0;
  for (auto& [w, v] : atoms) {
    if (w < 0.0) throw validation_error("mixture weights must be non-negative");
    total += w;
  }
  if (total <= 0.0) throw validation_error("mixture weights must not all vanish");
  for (auto& [w, v] : atoms) w /= total;
  // Sort by value so the quantile transform is monotone (shared marks then
  // produce comonotone draws across coupled copies).
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& l, const auto& r) { return l.second < r.second; });
  Dist1D d;
  d.kind = Kind::Mixture;
  d.atoms = std::move(atoms);
  return d;
}

double Dist1D::moment(double p) const {
  switch (kind) {
    case Kind::Dirac:
      return std::pow(a, p);
    case Kind::Uniform: {
      // int_a^b z^p dz / (b-a)
      const double num = std::pow(b, p + 1.0) - std::pow(a, p + 1.0);
      return num / ((p + 1.0) * (b - a));
    }
    case Kind::Mixture: {
      double s = 0.0;
      for (const auto& [w, v] : atoms) s += w * std::pow(v, p);
      return s;
    }
  }
  return 0.0;
}

double Dist1D::min_support() const {
  switch (kind) {
    case Kind::Dirac: return a;
    case Kind::Uniform: return a;
    case Kind::Mixture: return atoms.front().second;
  }
  return 0.0;
}

double Dist1D::max_support() const {
  switch (kind) {
    case Kind::Dirac: return a;
    case Kind::Uniform: return b;
    case Kind::Mixture: return atoms.back().second;
  }
  return 0.0;
}

double Dist1D::quantile(double u) const {
  switch (kind) {
    case Kind::Dirac:
      return a;
    case Kind::Uniform:
      return a + u * (b - a);
    case Kind::Mixture: {
      double acc = 0.0;
      for (const auto& [w, v] : atoms) {
        acc += w;
        if (u <= acc) return v;
      }
      return atoms.back().second;
    }
  }
  return a;
}

double Dist1D::sample_size_biased(rng_stream& rng) const {
  switch (kind) {
    case Kind::Dirac:
      return a;
    case Kind::Uniform: {
      // density ~ z on [a,b]: invert (z^2-a^2)/(b^2-a^2)
      const double u = rng.uniform();
      return std::sqrt(a * a + u * (b * b - a * a));
    }
    case Kind::Mixture: {
      double total = 0.0;
      for (const auto& [w, v] : atoms) total += w * v;
      if (total <= 0.0) throw numeric_error("size-biased draw from a zero-mean law");
      double u = rng.uniform() * total;
      for (const auto& [w, v] : atoms) {
        u -= w * v;
        if (u <= 0.0) return v;
      }
      return atoms.back().second;
    }
  }
  return a;
}

double Dist1D::sample_one_minus_biased(rng_stream& rng) const {
  switch (kind) {
    case Kind::Dirac:
      return a;
    case Kind::Uniform: {
      // density ~ (1-z) on [a,b]: invert ((1-a)^2-(1-z)^2)/((1-a)^2-(1-b)^2)
      const double u = rng.uniform();
      const double ca = (1.0 - a) * (1.0 - a);
      const double cb = (1.0 - b) * (1.0 - b);
      const double s = ca - u * (ca - cb);
      return 1.0 - std::sqrt(std::max(0.0, s));
    }
    case Kind::Mixture: {
      double total = 0.0;
      for (const auto& [w, v] : atoms) total += w * (1.0 - v);
      if (total <= 0.0) throw numeric_error("(1-H)-biased draw from a law concentrated at 1");
      double u = rng.uniform() * total;
      for (const auto& [w, v] : atoms) {
        u -= w * (1.0 - v);
        if (u <= 0.0) return v;
      }
      return atoms.back().second;
    }
  }
  return a;
}

// JumpLaw -----------------------------------------------------------------

JumpLaw JumpLaw::multiplicative(Dist1D h) {
  if (h.min_support() <= 0.0 || h.max_support() > 1.0 + kTol)
    throw validation_error("multiplicative jump factors must have support in (0,1]");
  JumpLaw j;
  j.kind = Kind::Multiplicative;
  j.dist = std::move(h);
  j.kernel_family = KernelFamily::DiracMixtureMult;
  if (j.dist.kind == Dist1D::Kind::Uniform) j.kernel_family = KernelFamily::Other;
  return j;
}

JumpLaw JumpLaw::additive_down(Dist1D amount) {
  if (amount.min_support() < 0.0)
    throw validation_error("additive-down jump amounts must have support in [0,inf)");
  JumpLaw j;
  j.kind = Kind::AdditiveDown;
  j.dist = std::move(amount);
  j.kernel_family = KernelFamily::Other;
  return j;
}

JumpLaw JumpLaw::general(std::function<double(double, double)> F,
                         std::function<double(double, double)> dxF) {
  JumpLaw j;
  j.kind = Kind::General;
  j.F = std::move(F);
  j.dxF = std::move(dxF);
  j.kernel_family = KernelFamily::Other;
  return j;
}

double JumpLaw::target(double x, double theta) const {
  switch (kind) {
    case Kind::Multiplicative: return dist.quantile(theta) * x;
    case Kind::AdditiveDown: return x - dist.quantile(theta);
    case Kind::General: return F(x, theta);
  }
  return x;
}

double JumpLaw::dx_target(double x, double theta) const {
  switch (kind) {
    case Kind::Multiplicative: return dist.quantile(theta);
    case Kind::AdditiveDown: return 1.0;
    case Kind::General: return dxF(x, theta);
  }
  return 1.0;
}

double JumpLaw::m1(double x, int quad_points) const {
  switch (kind) {
    case Kind::Multiplicative: return dist.mean();
    case Kind::AdditiveDown: return 1.0;
    case Kind::General: {
      if (analytic_m1) return (*analytic_m1)(x);
      double s = 0.0;
      for (double t : theta_nodes(quad_points)) s += dxF(x, t);
      return s / quad_points;
    }
  }
  return 1.0;
}

double JumpLaw::jint(double x, int quad_points) const {
  switch (kind) {
    case Kind::Multiplicative: return x * (1.0 - dist.mean());
    case Kind::AdditiveDown: return dist.mean();
    case Kind::General: {
      if (analytic_j) return (*analytic_j)(x);
      double s = 0.0;
      for (double t : theta_nodes(quad_points)) s += x - F(x, t);
      return s / quad_points;
    }
  }
  return 0.0;
}

// Zoo ---------------------------------------------------------------------

namespace {

std::vector<double> default_check_grid(const Interval& domain) {
  const double lo = std::isfinite(domain.lo) ? domain.lo : -25.0;
  double hi = std::isfinite(domain.hi) ? domain.hi : lo + 50.0;
  if (hi <= lo) hi = lo + 1.0;
  return uniform_grid(lo, hi, 257);
}

RateMonotonicity infer_rate_monotonicity(const ScalarField& rate,
                                         const std::vector<double>& grid) {
  bool any_up = false, any_down = false;
  for (double x : grid) {
    const double d = rate.deriv(x);
    if (d > 1e-9) any_up = true;
    if (d < -1e-9) any_down = true;
  }
  if (any_up && any_down) return RateMonotonicity::Unknown;
  if (any_up) return RateMonotonicity::Increasing;
  if (any_down) return RateMonotonicity::Decreasing;
  return RateMonotonicity::Constant;
}

bool dist_is_identity(const Dist1D& d) {
  return d.min_support() >= 1.0 - kTol && d.max_support() <= 1.0 + kTol;
}

void finish_model(ModelSpec& m) {
  const auto grid = default_check_grid(m.domain);
  if (m.rate_monotonicity == RateMonotonicity::Unknown)
    m.rate_monotonicity = infer_rate_monotonicity(m.rate, grid);
  bool rate_all_zero = true;
  for (double x : grid)
    if (std::fabs(m.rate.value(x)) > kTol) rate_all_zero = false;
  m.no_jumps = rate_all_zero;
  if (!m.no_jumps && m.jump.kind == JumpLaw::Kind::Multiplicative &&
      dist_is_identity(m.jump.dist))
    m.degenerate_jump = true;
  validate_model(m, grid);
}

}  // namespace

std::vector<double> uniform_grid(double lo, double hi, int n) {
  if (n < 2) throw validation_error("grid needs at least two points");
  if (!(lo < hi)) throw validation_error("grid window needs lo < hi");
  std::vector<double> g(n);
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[i] = lo + i * step;
  g.back() = hi;
  return g;
}

ModelSpec make_tcp(ScalarField rate, Dist1D jump_h, RateMonotonicity rate_monotonicity) {
  ModelSpec m;
  m.id = "tcp";
  m.domain = Interval::half_line();
  m.g = constant_field(1.0);
  m.sigma = constant_field(0.0);
  m.sigma_constant = true;
  m.rate = std::move(rate);
  m.jump = JumpLaw::multiplicative(std::move(jump_h));
  m.rate_monotonicity = rate_monotonicity;
  m.linear_drift = std::make_pair(1.0, 0.0);
  finish_model(m);
  return m;
}

ModelSpec make_feller_bt(double g_const, double s_const, ScalarField rate, Dist1D jump_h,
                         RateMonotonicity rate_monotonicity) {
  if (g_const <= 0.0) throw validation_error("feller_bt needs g_const > 0");
  if (s_const <= 0.0) throw validation_error("feller_bt needs s_const > 0");
  ModelSpec m;
  m.id = "feller_bt";
  m.domain = Interval::half_line();
  m.g = {[g_const](double x) { return g_const * x; }, [g_const](double) { return g_const; }};
  m.sigma = {[s_const](double x) { return s_const * x; }, [s_const](double) { return s_const; }};
  m.rate = std::move(rate);
  m.jump = JumpLaw::multiplicative(std::move(jump_h));
  m.rate_monotonicity = rate_monotonicity;
  m.linear_drift = std::make_pair(0.0, g_const);
  finish_model(m);
  return m;
}

ModelSpec make_storage(double g_const, double lambda, ScalarField rate,
                       RateMonotonicity rate_monotonicity) {
  if (g_const <= 0.0) throw validation_error("storage needs g_const > 0");
  if (lambda <= 0.0) throw validation_error("storage needs lambda > 0");
  ModelSpec m;
  m.id = "storage";
  m.domain = Interval::half_line();
  m.g = {[g_const](double x) { return -g_const * x; }, [g_const](double) { return -g_const; }};
  m.sigma = constant_field(0.0);
  m.sigma_constant = true;
  m.rate = std::move(rate);
  // Upward Exp(lambda) restock, written as a mark map: amount = -ln(theta)/lambda.
  m.jump = JumpLaw::general(
      [lambda](double x, double theta) { return x - std::log(theta) / lambda; },
      [](double, double) { return 1.0; });
  m.jump.analytic_m1 = [](double) { return 1.0; };
  m.jump.analytic_j = [lambda](double) { return -1.0 / lambda; };
  m.jump.kernel_family = JumpLaw::KernelFamily::ShiftedExponential;
  m.jump.kernel_lambda = lambda;
  m.rate_monotonicity = rate_monotonicity;
  m.linear_drift = std::make_pair(0.0, -g_const);
  // Theorem hypothesis: the restock rate must not decrease.
  for (double x : default_check_grid(m.domain))
    if (m.rate.deriv(x) < -1e-9)
      throw validation_error("storage model requires a non-decreasing rate (r'(" +
                             std::to_string(x) + ") < 0)");
  finish_model(m);
  return m;
}

ModelSpec make_ou(double mu) {
  if (mu <= 0.0) throw validation_error("ou needs mu > 0");
  ModelSpec m;
  m.id = "ou";
  m.domain = Interval::real();
  m.g = {[mu](double x) { return -mu * x; }, [mu](double) { return -mu; }};
  m.sigma = constant_field(1.0);
  m.sigma_constant = true;
  m.rate = constant_field(0.0);
  m.jump = JumpLaw::multiplicative(Dist1D::dirac(1.0));
  m.rate_monotonicity = RateMonotonicity::Constant;
  m.rate_global_bound = 0.0;
  m.linear_drift = std::make_pair(0.0, -mu);
  finish_model(m);
  return m;
}

ModelSpec make_langevin(const QPotential& q) {
  if (!q.q || !q.dq || !q.d2q)
    throw validation_error("langevin needs q, q' and q'' evaluators");
  ModelSpec m;
  m.id = "langevin";
  m.domain = Interval::real();
  auto dq = q.dq;
  auto d2q = q.d2q;
  m.g = {[dq](double x) { return -dq(x); }, [d2q](double x) { return -d2q(x); }};
  m.sigma = constant_field(1.0);
  m.sigma_constant = true;
  m.rate = constant_field(0.0);
  m.jump = JumpLaw::multiplicative(Dist1D::dirac(1.0));
  m.rate_monotonicity = RateMonotonicity::Constant;
  m.rate_global_bound = 0.0;
  finish_model(m);
  return m;
}

ModelSpec make_levy_integral(double r_const, Dist1D jump_h) {
  if (r_const <= 0.0) throw validation_error("levy_integral needs r_const > 0");
  ModelSpec m;
  m.id = "levy_integral";
  m.domain = Interval::real();
  m.g = constant_field(0.0);
  m.sigma = constant_field(1.0);
  m.sigma_constant = true;
  m.rate = constant_field(r_const);
  m.jump = JumpLaw::multiplicative(std::move(jump_h));
  m.rate_monotonicity = RateMonotonicity::Constant;
  m.rate_global_bound = r_const;
  m.linear_drift = std::make_pair(0.0, 0.0);
  finish_model(m);
  return m;
}

// Diagnostics -------------------------------------------------------------

MonotonicityReport validate_monotone(const ModelSpec& model, const std::vector<double>& grid) {
  if (grid.empty()) throw validation_error("validate_monotone needs a non-empty grid");
  for (double x : grid)
    if (!model.domain.contains(x))
      throw validation_error("validate_monotone grid point outside the domain");

  MonotonicityReport rep;
  const auto thetas = theta_nodes(33);

  auto check = [&](auto&& cond, const std::string& what) {
    MonotonicityCheck c;
    c.pass = true;
    c.detail = what + ": holds on the grid";
    for (double x : grid) {
      auto [ok, msg] = cond(x);
      if (!ok) {
        c.pass = false;
        c.witness = x;
        c.detail = what + ": fails at x = " + std::to_string(x) + " (" + msg + ")";
        break;
      }
    }
    return c;
  };

  rep.rate_decreasing = check(
      [&](double x) -> std::pair<bool, std::string> {
        const double d = model.rate.deriv(x);
        return {d <= 1e-9, "r' = " + std::to_string(d)};
      },
      "rate non-increasing");
  rep.rate_increasing = check(
      [&](double x) -> std::pair<bool, std::string> {
        const double d = model.rate.deriv(x);
        return {d >= -1e-9, "r' = " + std::to_string(d)};
      },
      "rate non-decreasing");

  if (model.no_jumps) {
    for (MonotonicityCheck* c : {&rep.jumps_down, &rep.jumps_up, &rep.jump_increasing_in_x}) {
      c->pass = true;
      c->detail = "vacuous: the jump rate vanishes";
    }
  } else {
    rep.jumps_down = check(
        [&](double x) -> std::pair<bool, std::string> {
          for (double t : thetas)
            if (model.jump.target(x, t) > x + kTol)
              return {false, "F(x,theta) > x at theta = " + std::to_string(t)};
          return {true, ""};
        },
        "jumps move down");
    rep.jumps_up = check(
        [&](double x) -> std::pair<bool, std::string> {
          for (double t : thetas)
            if (model.jump.target(x, t) < x - kTol)
              return {false, "F(x,theta) < x at theta = " + std::to_string(t)};
          return {true, ""};
        },
        "jumps move up");
    rep.jump_increasing_in_x = check(
        [&](double x) -> std::pair<bool, std::string> {
          for (double t : thetas)
            if (model.jump.dx_target(x, t) < -kTol)
              return {false, "d/dx F < 0 at theta = " + std::to_string(t)};
          return {true, ""};
        },
        "jump target increasing in x");
  }

  rep.bullets_pass =
      rep.rate_decreasing.pass && rep.jumps_down.pass && rep.jump_increasing_in_x.pass;
  rep.mirror_pass =
      rep.rate_increasing.pass && rep.jumps_up.pass && rep.jump_increasing_in_x.pass;

  if (rep.bullets_pass) {
    rep.note = "sufficient conditions satisfied (decreasing-rate set)";
  } else if (rep.mirror_pass) {
    rep.note = "sufficient conditions satisfied (mirrored increasing-rate set)";
  } else if (!model.no_jumps && model.jump.kind == JumpLaw::Kind::Multiplicative &&
             model.jump.dist.min_support() > 0.0 &&
             model.jump.dist.max_support() <= 1.0 + kTol) {
    // Neither bullet list matches (e.g. an increasing rate with downward
    // jumps).  Multiplicative factors in (0,1] still give the synchronous
    // coupling a mean-gap contraction at the potential rate (shared jumps
    // scale the gap by H; solo jumps enter at rate |r(x)-r(y)| = O(gap)), so
    // the pair is admitted for coupling studies.  Pathwise order may flip on
    // solo-jump events, so order assertions must not rely on this flag.
    rep.structural_monotone = true;
    rep.note = "bullets not satisfied; monotonicity asserted by jump structure";
  } else {
    rep.note = "no sufficient condition set satisfied";
  }
  return rep;
}

void validate_model(const ModelSpec& model, const std::vector<double>& grid) {
  for (double x : grid) {
    if (!model.domain.contains(x)) continue;
    const double s = model.sigma.value(x);
    if (!(s >= -kTol))
      throw validation_error("sigma(" + std::to_string(x) + ") = " + std::to_string(s) +
                             " is negative");
    const double r = model.rate.value(x);
    if (!(r >= -kTol))
      throw validation_error("rate(" + std::to_string(x) + ") = " + std::to_string(r) +
                             " is negative");
    const double rd = model.rate.deriv(x);
    if (model.rate_monotonicity == RateMonotonicity::Decreasing && rd > 1e-9)
      throw validation_error("rate declared decreasing but r'(" + std::to_string(x) +
                             ") = " + std::to_string(rd));
    if (model.rate_monotonicity == RateMonotonicity::Increasing && rd < -1e-9)
      throw validation_error("rate declared increasing but r'(" + std::to_string(x) +
                             ") = " + std::to_string(rd));
  }
}

// JSON interface ----------------------------------------------------------

namespace {

using nlohmann::json;

double json_number(const json& j, const std::string& key) {
  if (!j.contains(key)) throw validation_error("model JSON: missing field \"" + key + "\"");
  if (!j[key].is_number()) throw validation_error("model JSON: field \"" + key + "\" must be a number");
  return j[key].get<double>();
}

std::string json_string(const json& j, const std::string& key) {
  if (!j.contains(key)) throw validation_error("model JSON: missing field \"" + key + "\"");
  if (!j[key].is_string()) throw validation_error("model JSON: field \"" + key + "\" must be a string");
  return j[key].get<std::string>();
}

ScalarField field_from_json(const json& j, const std::string& value_key,
                            const std::string& deriv_key) {
  ScalarField f;
  f.value = compile_expression(json_string(j, value_key));
  f.deriv = compile_expression(json_string(j, deriv_key));
  return f;
}

Dist1D dist_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("model JSON: distribution must be an object");
  const std::string kind = json_string(j, "kind");
  if (kind == "dirac") return Dist1D::dirac(json_number(j, "value"));
  if (kind == "uniform") return Dist1D::uniform(json_number(j, "a"), json_number(j, "b"));
  if (kind == "mixture") {
    if (!j.contains("atoms") || !j["atoms"].is_array())
      throw validation_error("model JSON: mixture needs an \"atoms\" array");
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : j["atoms"]) {
      if (!a.is_array() || a.size() != 2)
        throw validation_error("model JSON: each mixture atom is [weight, value]");
      atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
    return Dist1D::mixture(std::move(atoms));
  }
  throw validation_error("model JSON: unknown distribution kind \"" + kind + "\"");
}

double bound_from_json(const json& v, bool lower) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw validation_error(std::string("model JSON: bad ") + (lower ? "lower" : "upper") +
                         " domain bound");
}

RateMonotonicity monotonicity_from_json(const json& j) {
  if (!j.contains("rate_monotonicity")) return RateMonotonicity::Unknown;
  const std::string s = j["rate_monotonicity"].get<std::string>();
  if (s == "decreasing") return RateMonotonicity::Decreasing;
  if (s == "increasing") return RateMonotonicity::Increasing;
  if (s == "constant") return RateMonotonicity::Constant;
  if (s == "unknown") return RateMonotonicity::Unknown;
  throw validation_error("model JSON: bad rate_monotonicity \"" + s + "\"");
}

ModelSpec custom_from_json(const json& j) {
  ModelSpec m;
  m.id = j.value("id", std::string("custom"));
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    if (!d.is_array() || d.size() != 2)
      throw validation_error("model JSON: domain must be [lo, hi]");
    m.domain.lo = bound_from_json(d[0], true);
    m.domain.hi = bound_from_json(d[1], false);
    if (!(m.domain.lo < m.domain.hi)) throw validation_error("model JSON: domain needs lo < hi");
  }
  m.g = field_from_json(j, "g", "g_prime");
  m.sigma = field_from_json(j, "sigma", "sigma_prime");
  m.rate = field_from_json(j, "rate", "rate_prime");
  m.rate_monotonicity = monotonicity_from_json(j);
  if (j.contains("rate_global_bound")) m.rate_global_bound = json_number(j, "rate_global_bound");

  if (!j.contains("jump")) throw validation_error("model JSON: custom model needs a \"jump\" block");
  const auto& jj = j["jump"];
  const std::string jkind = json_string(jj, "kind");
  if (jkind == "multiplicative") {
    m.jump = JumpLaw::multiplicative(dist_from_json(jj.at("dist")));
  } else if (jkind == "additive_down") {
    m.jump = JumpLaw::additive_down(dist_from_json(jj.at("dist")));
  } else if (jkind == "none") {
    m.jump = JumpLaw::multiplicative(Dist1D::dirac(1.0));
  } else {
    throw validation_error("model JSON: unknown jump kind \"" + jkind +
                           "\" (custom models take multiplicative, additive_down or none)");
  }
  finish_model(m);
  return m;
}

}  // namespace

ModelSpec model_from_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw validation_error(std::string("model JSON parse failure: ") + e.what());
  }
  if (!j.is_object()) throw validation_error("model JSON: top level must be an object");
  const std::string kind = json_string(j, "model");

  ModelSpec m;
  if (kind == "tcp") {
    m = make_tcp(field_from_json(j, "rate", "rate_prime"), dist_from_json(j.at("h")),
                 monotonicity_from_json(j));
  } else if (kind == "feller_bt") {
    m = make_feller_bt(json_number(j, "g_const"), json_number(j, "s_const"),
                       field_from_json(j, "rate", "rate_prime"), dist_from_json(j.at("h")),
                       monotonicity_from_json(j));
  } else if (kind == "storage") {
    m = make_storage(json_number(j, "g_const"), json_number(j, "lambda"),
                     field_from_json(j, "rate", "rate_prime"));
  } else if (kind == "ou") {
    m = make_ou(json_number(j, "mu"));
  } else if (kind == "langevin") {
    QPotential q;
    q.q = compile_expression(json_string(j, "q"));
    q.dq = compile_expression(json_string(j, "q_prime"));
    q.d2q = compile_expression(json_string(j, "q_second"));
    m = make_langevin(q);
  } else if (kind == "levy_integral") {
    m = make_levy_integral(json_number(j, "r_const"), dist_from_json(j.at("h")));
  } else if (kind == "custom") {
    m = custom_from_json(j);
  } else {
    throw validation_error("model JSON: unknown model \"" + kind + "\"");
  }
  if (j.contains("id")) m.id = j["id"].get<std::string>();
  if (j.contains("rate_global_bound")) m.rate_global_bound = json_number(j, "rate_global_bound");
  return m;
}

ModelSpec model_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open model JSON file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json_text(buf.str());
}

Dist1D dist1d_from_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw validation_error(std::string("distribution JSON parse failure: ") + e.what());
  }
  return dist_from_json(j);
}

}  // namespace ergo

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ergo/model.hpp"
#include "ergo/rng.hpp"

using namespace ergo;

namespace {

ScalarField affine_rate(double a, double b) {  // r(x) = a + b x
  return {[a, b](double x) { return a + b * x; }, [b](double) { return b; }};
}

ScalarField decreasing_rate() {  // r(x) = 3/(1+x)
  return {[](double x) { return 3.0 / (1.0 + x); },
          [](double x) { return -3.0 / ((1.0 + x) * (1.0 + x)); }};
}

QPotential double_well() {
  QPotential q;
  q.q = [](double x) { return x * x * x * x / 4.0 - x * x / 2.0; };
  q.dq = [](double x) { return x * x * x - x; };
  q.d2q = [](double x) { return 3.0 * x * x - 1.0; };
  return q;
}

std::vector<ModelSpec> zoo() {
  std::vector<ModelSpec> z;
  z.push_back(make_tcp(affine_rate(1.0, 1.0), Dist1D::dirac(0.5)));
  z.push_back(make_feller_bt(1.0, 1.0, affine_rate(3.0, 0.0), Dist1D::dirac(0.5)));
  z.push_back(make_storage(1.0, 1.0, affine_rate(2.0, 0.0)));
  z.push_back(make_ou(1.0));
  z.push_back(make_langevin(double_well()));
  z.push_back(make_levy_integral(1.0, Dist1D::dirac(0.5)));
  return z;
}

std::vector<double> sample_grid(const ModelSpec& m, int n) {
  const double lo = std::isfinite(m.domain.lo) ? m.domain.lo : -10.0;
  const double hi = std::isfinite(m.domain.hi) ? m.domain.hi : lo + 20.0;
  return uniform_grid(lo, hi, n);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zoo coefficients: sigma and rate stay non-negative, derivatives consistent") {
  for (const auto& m : zoo()) {
    CAPTURE(m.id);
    const auto grid = sample_grid(m, 100);
    for (double x : grid) {
      CHECK(m.sigma.value(x) >= -1e-12);
      CHECK(m.rate.value(x) >= -1e-12);
    }
    CHECK(scalar_field_deriv_mismatch(m.g, grid) < 1e-4);
    CHECK(scalar_field_deriv_mismatch(m.sigma, grid) < 1e-4);
    CHECK(scalar_field_deriv_mismatch(m.rate, grid) < 1e-4);
  }
}

TEST_CASE("deriv mismatch detector flags a wrong derivative") {
  ScalarField bad{[](double x) { return x * x; }, [](double x) { return 3.0 * x; }};
  CHECK(scalar_field_deriv_mismatch(bad, uniform_grid(0.5, 5.0, 20)) > 1e-2);
}

TEST_CASE("analytic jump-factor moments match Monte Carlo") {
  const std::vector<Dist1D> dists = {
      Dist1D::dirac(0.5), Dist1D::uniform(0.25, 0.75),
      Dist1D::mixture({{0.3, 0.4}, {0.7, 0.9}})};
  for (const auto& d : dists) {
    rng_stream rng(314159, 0);
    const int n = 1000000;
    double sums[5] = {0, 0, 0, 0, 0};
    double sq[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < n; ++i) {
      const double h = d.sample(rng);
      double p = 1.0;
      for (int k = 1; k <= 4; ++k) {
        p *= h;
        sums[k] += p;
        sq[k] += p * p;
      }
    }
    for (int k = 1; k <= 4; ++k) {
      const double mean = sums[k] / n;
      const double se = std::sqrt((sq[k] / n - mean * mean) / n);
      const double analytic = d.moment(static_cast<double>(k));
      CAPTURE(k);
      CHECK(std::fabs(mean - analytic) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("Dist1D structure") {
  const auto u = Dist1D::uniform(0.2, 0.8);
  CHECK(u.mean() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(u.min_support() == 0.2);
  CHECK(u.max_support() == 0.8);
  CHECK(u.quantile(0.0) == doctest::Approx(0.2));
  CHECK(u.quantile(1.0) == doctest::Approx(0.8));

  // Mixture weights normalize and atoms sort by value.
  const auto m = Dist1D::mixture({{6.0, 0.9}, {2.0, 0.3}});
  CHECK(m.atoms.front().second == 0.3);
  CHECK(m.atoms.front().first == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(m.atoms.back().first == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(m.moment(2.0) == doctest::Approx(0.25 * 0.09 + 0.75 * 0.81).epsilon(1e-14));

  CHECK_THROWS_AS(Dist1D::uniform(0.5, 0.5), validation_error);
  CHECK_THROWS_AS(Dist1D::mixture({}), validation_error);
  CHECK_THROWS_AS(Dist1D::mixture({{-1.0, 0.5}}), validation_error);
}

TEST_CASE("jump-law support validation") {
  CHECK_THROWS_AS(JumpLaw::multiplicative(Dist1D::dirac(1.5)), validation_error);
  CHECK_THROWS_AS(JumpLaw::multiplicative(Dist1D::dirac(0.0)), validation_error);
  CHECK_THROWS_AS(JumpLaw::multiplicative(Dist1D::uniform(-0.1, 0.5)), validation_error);
  CHECK_THROWS_AS(JumpLaw::additive_down(Dist1D::uniform(-1.0, 1.0)), validation_error);
  CHECK_NOTHROW(JumpLaw::multiplicative(Dist1D::dirac(1.0)));
  CHECK_NOTHROW(JumpLaw::additive_down(Dist1D::dirac(0.0)));
}

TEST_CASE("jump-law first-moment integrals") {
  // Closed forms for a multiplicative law...
  const auto mult = JumpLaw::multiplicative(Dist1D::uniform(0.2, 0.8));
  CHECK(mult.m1(3.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mult.jint(3.0) == doctest::Approx(3.0 * 0.5).epsilon(1e-14));

  // ...agree with the quadrature fallback of the equivalent General law
  // (the integrand is linear in theta, which the midpoint rule integrates exactly).
  auto gen = JumpLaw::general(
      [](double x, double t) { return (0.2 + 0.6 * t) * x; },
      [](double, double t) { return 0.2 + 0.6 * t; });
  CHECK(gen.m1(3.0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(gen.jint(3.0) == doctest::Approx(1.5).epsilon(1e-13));
  // Doubling the rule is the documented convergence check.
  CHECK(gen.m1(3.0, 128) == doctest::Approx(gen.m1(3.0, 64)).epsilon(1e-12));

  const auto add = JumpLaw::additive_down(Dist1D::dirac(0.7));
  CHECK(add.m1(5.0) == 1.0);
  CHECK(add.jint(5.0) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(add.target(5.0, 0.3) == doctest::Approx(4.3).epsilon(1e-14));
}

TEST_CASE("size-biased and (1-h)-biased draws") {
  const auto mix = Dist1D::mixture({{0.5, 0.25}, {0.5, 0.75}});
  rng_stream rng(2718, 0);
  const int n = 200000;
  double mean_sb = 0.0, mean_omb = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_sb += mix.sample_size_biased(rng);
    mean_omb += mix.sample_one_minus_biased(rng);
  }
  mean_sb /= n;
  mean_omb /= n;
  // E[H^2]/E[H] and E[H(1-H)]/E[1-H]
  const double sb = mix.moment(2.0) / mix.moment(1.0);
  const double omb = (mix.moment(1.0) - mix.moment(2.0)) / (1.0 - mix.moment(1.0));
  CHECK(std::fabs(mean_sb - sb) < 4.0 * 0.25 / std::sqrt(static_cast<double>(n)));
  CHECK(std::fabs(mean_omb - omb) < 4.0 * 0.25 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("zoo constructor preconditions") {
  CHECK_THROWS_AS(make_feller_bt(0.0, 1.0, affine_rate(3.0, 0.0), Dist1D::dirac(0.5)),
                  validation_error);
  CHECK_THROWS_AS(make_feller_bt(1.0, -1.0, affine_rate(3.0, 0.0), Dist1D::dirac(0.5)),
                  validation_error);
  CHECK_THROWS_AS(make_storage(1.0, 0.0, affine_rate(2.0, 0.0)), validation_error);
  CHECK_THROWS_AS(make_storage(0.0, 1.0, affine_rate(2.0, 0.0)), validation_error);
  CHECK_THROWS_AS(make_storage(1.0, 1.0, decreasing_rate()), validation_error);
  CHECK_THROWS_AS(make_ou(0.0), validation_error);
  CHECK_THROWS_AS(make_levy_integral(-1.0, Dist1D::dirac(0.5)), validation_error);
  // Negative rate caught by the model-level sanity grid.
  CHECK_THROWS_AS(make_tcp(affine_rate(-1.0, 0.0), Dist1D::dirac(0.5)), validation_error);
}

TEST_CASE("declared rate monotonicity is checked against r'") {
  CHECK_THROWS_AS(make_tcp(affine_rate(1.0, 1.0), Dist1D::dirac(0.5),
                           RateMonotonicity::Decreasing),
                  validation_error);
  CHECK_NOTHROW(make_tcp(affine_rate(1.0, 1.0), Dist1D::dirac(0.5),
                         RateMonotonicity::Increasing));
}

TEST_CASE("structural flags") {
  const auto tcp = make_tcp(affine_rate(1.0, 1.0), Dist1D::dirac(0.5));
  CHECK(tcp.domain.lo == 0.0);
  CHECK(!tcp.no_jumps);
  CHECK(!tcp.degenerate_jump);
  CHECK(tcp.linear_drift.has_value());
  CHECK(tcp.sigma_constant);

  // F(x,.) == x a.s. is accepted but flagged.
  const auto degen = make_tcp(affine_rate(1.0, 0.0), Dist1D::dirac(1.0));
  CHECK(degen.degenerate_jump);

  const auto ou = make_ou(2.0);
  CHECK(ou.no_jumps);
  CHECK(ou.sigma_constant);
  CHECK(ou.linear_drift);
  CHECK(ou.linear_drift->second == doctest::Approx(-2.0));

  // Inferred monotonicity when the caller leaves it Unknown.
  CHECK(tcp.rate_monotonicity == RateMonotonicity::Increasing);
  const auto tcp_dec = make_tcp(decreasing_rate(), Dist1D::dirac(0.5));
  CHECK(tcp_dec.rate_monotonicity == RateMonotonicity::Decreasing);
}

TEST_CASE("validate_monotone bullet sets") {
  const auto grid = uniform_grid(0.0, 10.0, 11);

  // Decreasing rate + downward multiplicative jumps: the published bullets.
  const auto rep1 = validate_monotone(make_tcp(decreasing_rate(), Dist1D::dirac(0.5)), grid);
  CHECK(rep1.bullets_pass);

  // Increasing rate + downward jumps matches neither bullet set, but the
  // multiplicative structure still keeps ordered copies orderable.
  const auto rep2 =
      validate_monotone(make_tcp(affine_rate(1.0, 1.0), Dist1D::dirac(0.5)), grid);
  CHECK(!rep2.bullets_pass);
  CHECK(!rep2.mirror_pass);
  CHECK(rep2.structural_monotone);
  CHECK(rep2.note.find("jump structure") != std::string::npos);

  // Storage: increasing rate with upward jumps is the mirrored set.
  const auto rep3 = validate_monotone(make_storage(1.0, 1.0, affine_rate(2.0, 0.5)),
                                      grid);
  CHECK(rep3.mirror_pass);

  // Diffusions without jumps pass vacuously.
  const auto rep4 = validate_monotone(make_ou(1.0), uniform_grid(-5.0, 5.0, 11));
  CHECK(rep4.bullets_pass);

  CHECK_THROWS_AS(validate_monotone(make_ou(1.0), {}), validation_error);
  CHECK_THROWS_AS(validate_monotone(make_tcp(affine_rate(1.0, 0.0), Dist1D::dirac(0.5)),
                                    {-1.0}),
                  validation_error);
}

TEST_CASE("grid helper") {
  const auto g = uniform_grid(0.0, 1.0, 5);
  CHECK(g.size() == 5);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(uniform_grid(0.0, 1.0, 1), validation_error);
  CHECK_THROWS_AS(uniform_grid(1.0, 0.0, 5), validation_error);
}

TEST_CASE("models parse from JSON") {
  const auto tcp = model_from_json_text(R"({
    "model": "tcp",
    "rate": "x+1", "rate_prime": "1",
    "h": {"kind": "dirac", "value": 0.5}
  })");
  CHECK(tcp.id == "tcp");
  CHECK(tcp.rate.value(2.0) == doctest::Approx(3.0));
  CHECK(tcp.jump.dist.a == 0.5);

  const auto feller = model_from_json_text(R"({
    "model": "feller_bt", "g_const": 1.0, "s_const": 1.0,
    "rate": "3", "rate_prime": "0",
    "h": {"kind": "mixture", "atoms": [[0.5, 0.25], [0.5, 0.75]]},
    "id": "feller-test"
  })");
  CHECK(feller.id == "feller-test");
  CHECK(feller.sigma.value(2.0) == doctest::Approx(2.0));

  const auto storage = model_from_json_text(R"({
    "model": "storage", "g_const": 1.0, "lambda": 2.0,
    "rate": "2 + 0.5*x", "rate_prime": "0.5"
  })");
  CHECK(storage.jump.kernel_lambda == doctest::Approx(2.0));
  CHECK(storage.jump.analytic_j.has_value());

  const auto ou = model_from_json_text(R"({"model": "ou", "mu": 1.5})");
  CHECK(ou.g.value(2.0) == doctest::Approx(-3.0));

  const auto lang = model_from_json_text(R"({
    "model": "langevin",
    "q": "x^4/4 - x^2/2", "q_prime": "x^3 - x", "q_second": "3*x^2 - 1"
  })");
  CHECK(lang.g.value(2.0) == doctest::Approx(-6.0));

  const auto levy = model_from_json_text(R"({
    "model": "levy_integral", "r_const": 2.0,
    "h": {"kind": "dirac", "value": 0.5},
    "rate_global_bound": 2.0
  })");
  CHECK(levy.rate.value(0.0) == doctest::Approx(2.0));
  CHECK(levy.rate_global_bound.has_value());

  const auto custom = model_from_json_text(R"({
    "model": "custom", "id": "drift-only",
    "domain": [0, "inf"],
    "g": "-0.5*x", "g_prime": "-0.5",
    "sigma": "0", "sigma_prime": "0",
    "rate": "0", "rate_prime": "0",
    "jump": {"kind": "none"}
  })");
  CHECK(custom.id == "drift-only");
  CHECK(custom.no_jumps);
  CHECK(custom.domain.lo == 0.0);
  CHECK(std::isinf(custom.domain.hi));
}

TEST_CASE("JSON validation failures name the problem") {
  CHECK_THROWS_AS(model_from_json_text("not json"), validation_error);
  CHECK_THROWS_AS(model_from_json_text(R"({"model": "nope"})"), validation_error);
  CHECK_THROWS_AS(model_from_json_text(R"({"model": "ou"})"), validation_error);
  try {
    model_from_json_text(R"({"model": "ou"})");
  } catch (const validation_error& e) {
    CHECK(std::string(e.what()).find("mu") != std::string::npos);
  }
  CHECK_THROWS_AS(dist1d_from_json_text(R"({"kind": "weird"})"), validation_error);
  CHECK_THROWS_AS(dist1d_from_json_text(R"({"kind": "mixture", "atoms": [[1.0]]})"),
                  validation_error);
  const auto d = dist1d_from_json_text(R"({"kind": "uniform", "a": 0.1, "b": 0.9})");
  CHECK(d.kind == Dist1D::Kind::Uniform);
}

}  // TEST_SUITE

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bsq/analytics.hpp"

namespace {

double xi2_one_body_reference(int n, double chi, double g, double t) {
  const double x = chi * t, e = std::exp(-g * t);
  const double base1 = (g * g + chi * (g * std::sin(x) + chi * std::cos(x)) * e) / (g * g + chi * chi);
  const double base2 =
      (g * g + 2 * chi * (g * std::sin(2 * x) + 2 * chi * std::cos(2 * x)) * e) / (g * g + 4 * chi * chi);
  const double at = 1.0 - std::pow(base2, n - 2);
  const double bt = 4.0 * std::sin(x) * std::pow(base1, n - 2);
  return (1.0 + 0.25 * (n - 1) * e * (at - std::sqrt(at * at + bt * bt))) / std::pow(base1, 2 * n - 2);
}

// Generating function evaluated straight from its definition.
double f_beta_reference(int beta, double alpha, const bsq::LossRates& g, double chi, double t) {
  double s = 0.0;
  for (int m = 1; m <= 3; ++m) {
    const double y = beta * chi * t;
    const double ratio = beta == 0 ? 1.0 : std::sin(m * y) / (m * y * std::pow(std::cos(y), m));
    s += 2.0 * g[m - 1] * t * std::exp(alpha * m) * ratio;
  }
  return std::exp(s);
}

// (N - d)(N - 1 - d) and (N - d) applied with five-point finite differences.
struct FiniteDiffMoments {
  double bdaga, quad_a, quad_b;
};

FiniteDiffMoments constant_rate_reference(double n, double chi, const bsq::LossRates& g, double t) {
  const double alpha = std::log(0.5 * n), h = 1e-3;
  const auto derivs = [&](int beta) {
    const auto f = [&](double a) { return f_beta_reference(beta, a, g, chi, t); };
    const double fm2 = f(alpha - 2 * h), fm1 = f(alpha - h), f0 = f(alpha), fp1 = f(alpha + h),
                 fp2 = f(alpha + 2 * h);
    const double d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
    const double d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
    return std::array<double, 3>{f0, d1, d2};
  };
  double lambda = 0.0;
  for (int m = 1; m <= 3; ++m) lambda += 2.0 * g[m - 1] * std::pow(0.5 * n, m);
  const double damp = std::exp(-lambda * t), x = chi * t;
  const auto pair = [&](const std::array<double, 3>& d) { return n * (n - 1) * d[0] - (2 * n - 1) * d[1] + d[2]; };
  const auto d0 = derivs(0), d1 = derivs(1), d2 = derivs(2);
  FiniteDiffMoments out;
  out.bdaga = 0.5 * damp * std::pow(std::cos(x), n - 1) * (n * d1[0] - d1[1]);
  out.quad_a = damp / 8.0 * (pair(d0) - std::pow(std::cos(2 * x), n - 2) * pair(d2));
  out.quad_b = 0.5 * damp * std::pow(std::cos(x), n - 2) * std::sin(x) * pair(d1);
  return out;
}

// Minimizes the three-term expansion by bisection on its derivative.
bsq::BestSqueezing asymptotic_minimum_reference(double n, double chi, double gsq) {
  const auto dxi = [&](double t) {
    return -2.0 / (n * n * chi * chi * t * t * t) + 4.0 / 6.0 * n * n * std::pow(chi, 4) * t * t * t + gsq / 3.0;
  };
  double lo = 1e-12 / chi, hi = 10.0 / chi;
  for (int i = 0; i < 400; ++i) {
    const double mid = std::sqrt(lo * hi);
    (dxi(mid) < 0.0 ? lo : hi) = mid;
  }
  const double t = std::sqrt(lo * hi);
  return {t, bsq::xi2_asymptotic(n, chi, gsq, t)};
}

}  // namespace

TEST_CASE("exact one-body squeezing") {
  SUBCASE("matches the direct evaluation") {
    for (int n : {5, 50, 400})
      for (double g : {0.0, 0.01, 0.3, 2.0})
        for (double t : {0.001, 0.02, 0.1, 0.3}) {
          CAPTURE(n);
          CAPTURE(g);
          CAPTURE(t);
          CHECK(bsq::xi2_one_body_exact(n, 1.0, g, t) ==
                doctest::Approx(xi2_one_body_reference(n, 1.0, g, t)).epsilon(1e-9));
        }
  }
  SUBCASE("no squeezing at t = 0") { CHECK(bsq::xi2_one_body_exact(1000, 1.0, 0.1, 0.0) == 1.0); }
  SUBCASE("finite at large N") {
    const double n = 2.8e5, scale = std::pow(n, -2.0 / 3.0);
    double best = 1.0;
    for (int i = 1; i <= 200; ++i) {
      const double v = bsq::xi2_one_body_exact(n, 1.0, 1e-5, 10.0 * scale * i / 200);
      REQUIRE(std::isfinite(v));
      best = std::min(best, v);
    }
    const auto asym = bsq::best_time_and_xi2({n, 1.0, 1e-5});
    CHECK(best == doctest::Approx(asym.xi2).epsilon(0.05));
  }
  SUBCASE("negative bracket is a domain error") {
    CHECK_THROWS_AS(bsq::xi2_one_body_exact(100, 1.0, 0.0, 2.0), bsq::DomainError);
    CHECK_THROWS_AS(bsq::xi2_one_body_exact(1, 1.0, 0.0, 0.1), bsq::ConfigError);
  }
}

TEST_CASE("generating function derivatives") {
  SUBCASE("lossless") {
    const auto d = bsq::f_log_derivatives(1, 3.0, {0, 0, 0}, 1.0, 0.1);
    CHECK(d.f == 1.0);
    CHECK(d.df == 0.0);
    CHECK(d.d2f == 0.0);
  }
  SUBCASE("beta = 0 single term") {
    const double g = 0.01, t = 0.2, alpha = std::log(30.0);
    const auto d = bsq::f_log_derivatives(0, alpha, {0, g, 0}, 1.0, t);
    const double w = 2 * g * t * std::exp(2 * alpha);
    CHECK(d.f == doctest::Approx(std::exp(w)).epsilon(1e-14));
    CHECK(d.df == doctest::Approx(2 * w * std::exp(w)).epsilon(1e-14));
    CHECK(d.d2f == doctest::Approx((4 * w * w + 4 * w) * std::exp(w)).epsilon(1e-14));
  }
  SUBCASE("finite differences at beta = 1") {
    const bsq::LossRates g{0, 1e-5, 0};
    const double alpha = std::log(50.0), t = 0.05, h = 1e-3;
    const auto d = bsq::f_log_derivatives(1, alpha, g, 1.0, t);
    const auto f = [&](double a) { return f_beta_reference(1, a, g, 1.0, t); };
    CHECK(d.f == doctest::Approx(f(alpha)).epsilon(1e-13));
    CHECK(d.df == doctest::Approx((f(alpha - 2 * h) - 8 * f(alpha - h) + 8 * f(alpha + h) - f(alpha + 2 * h)) / (12 * h))
                      .epsilon(1e-6));
    CHECK(d.d2f == doctest::Approx((-f(alpha - 2 * h) + 16 * f(alpha - h) - 30 * f(alpha) + 16 * f(alpha + h) -
                                    f(alpha + 2 * h)) /
                                   (12 * h * h))
                       .epsilon(1e-6));
  }
  SUBCASE("cos(beta chi t) at the floor") {
    CHECK_THROWS_AS(bsq::f_log_derivatives(2, 1.0, {0.1, 0, 0}, 1.0, 0.785), bsq::DomainError);
    CHECK_THROWS_AS(bsq::f_log_derivatives(3, 1.0, {0.1, 0, 0}, 1.0, 0.1), bsq::ConfigError);
  }
}

TEST_CASE("constant-rate moments") {
  SUBCASE("agree with finite-difference derivatives of F") {
    const double n = 60, chi = 1.0;
    const bsq::LossRates g{0.02, 4e-4, 1e-5};
    for (double t : {0.02, 0.08, 0.15}) {
      const auto m = bsq::moments_constant_rate(n, chi, g, t);
      const auto ref = constant_rate_reference(n, chi, g, t);
      CAPTURE(t);
      CHECK(m.bdaga.real() == doctest::Approx(ref.bdaga).epsilon(1e-7));
      CHECK(m.quad_A == doctest::Approx(ref.quad_a).epsilon(1e-6));
      CHECK(m.quad_B == doctest::Approx(ref.quad_b).epsilon(1e-6));
      const auto lost = bsq::lost_fraction_rates(n, g);
      CHECK(m.n_mean == doctest::Approx(n * (1 - (lost[0] + lost[1] + lost[2]) * t)).epsilon(1e-14));
    }
  }
  SUBCASE("lossless limit is one-axis twisting") {
    const double n = 200;
    for (double x : {0.005, 0.03, 0.1}) {
      const auto m = bsq::moments_constant_rate(n, 1.0, {0, 0, 0}, x);
      CHECK(m.bdaga.real() == doctest::Approx(0.5 * n * std::pow(std::cos(x), n - 1)).epsilon(1e-12));
      CHECK(m.quad_A == doctest::Approx(n * (n - 1) / 8 * (1 - std::pow(std::cos(2 * x), n - 2))).epsilon(1e-11));
      CHECK(m.quad_B == doctest::Approx(n * (n - 1) / 2 * std::sin(x) * std::pow(std::cos(x), n - 2)).epsilon(1e-11));
    }
  }
  SUBCASE("unsqueezed at t = 0") {
    CHECK(bsq::xi2_constant_rate(500, 1.0, {0.1, 0.001, 1e-6}, 0.0).xi2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("first order in one-body loss it reproduces the exact solution") {
    const double n = 1000, g = 1e-4, t = 0.01;
    CHECK(bsq::xi2_constant_rate(n, 1.0, {g, 0, 0}, t).xi2 ==
          doctest::Approx(bsq::xi2_one_body_exact(n, 1.0, g, t)).epsilon(1e-4));
  }
  SUBCASE("domain") {
    CHECK_THROWS_AS(bsq::moments_constant_rate(100, 1.0, {0, 0, 0}, 0.8), bsq::DomainError);
    CHECK_THROWS_AS(bsq::moments_constant_rate(100, 1.0, {3.0, 0, 0}, 0.5), bsq::DomainError);
    CHECK_THROWS_AS(bsq::moments_constant_rate(100, 1.0, {-0.1, 0, 0}, 0.1), bsq::ConfigError);
  }
}

TEST_CASE("asymptotic optimum") {
  SUBCASE("minimizes the expansion") {
    for (double n : {1e3, 1e5, 1e8})
      for (double c : {0.0, 0.3, 1.0, 10.0, 100.0}) {
        const double chi = 2.0, gsq = 2.0 * c * chi;
        const auto best = bsq::best_time_and_xi2({n, chi, gsq});
        const auto ref = asymptotic_minimum_reference(n, chi, gsq);
        CAPTURE(n);
        CAPTURE(c);
        CHECK(best.t_best == doctest::Approx(ref.t_best).epsilon(1e-9));
        CHECK(best.xi2 == doctest::Approx(ref.xi2).epsilon(1e-12));
        CHECK(bsq::xi2_asymptotic(n, chi, gsq, best.t_best) == doctest::Approx(best.xi2).epsilon(1e-12));
      }
  }
  SUBCASE("shape function") {
    CHECK(bsq::squeezing_shape(0.0) == doctest::Approx(std::sqrt(12.0)).epsilon(1e-15));
    double prev_f = 1e300, prev_t = 1e300, prev_xi = 0.0;
    for (double c = 0.0; c < 1e4; c = c * 1.7 + 0.01) {
      const double f = bsq::squeezing_shape(c);
      CHECK(f * f + 2 * c * f - 12 == doctest::Approx(0.0).scale(12.0).epsilon(1e-12));
      CHECK(f > 0.0);
      CHECK(f < prev_f);
      const auto best = bsq::best_time_and_xi2({1e6, 1.0, 2 * c});
      CHECK(best.t_best < prev_t);
      CHECK(best.xi2 > prev_xi);
      prev_f = f;
      prev_t = best.t_best;
      prev_xi = best.xi2;
    }
  }
  SUBCASE("penalty form is the same expansion") {
    for (double t : {1e-4, 3e-3, 0.02})
      CHECK(bsq::xi2_penalty_form(1e4, 1.0, 0.3, t) == doctest::Approx(bsq::xi2_asymptotic(1e4, 1.0, 0.3, t)).epsilon(1e-14));
  }
  SUBCASE("lossless scaling") {
    const auto b1 = bsq::best_time_and_xi2({1e4, 1.0, 0.0});
    const auto b2 = bsq::best_time_and_xi2({8e4, 1.0, 0.0});
    CHECK(b2.xi2 / b1.xi2 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b2.t_best / b1.t_best == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(bsq::best_time_and_xi2({1e4, 0.0, 0.0}), bsq::ConfigError);
    CHECK_THROWS_AS(bsq::xi2_lossless_asymptotic(1e4, 1.0, 0.0), bsq::ConfigError);
  }
}

TEST_CASE("time minimization") {
  SUBCASE("quadratic") {
    const auto r = bsq::minimize_xi2_over_t([](double t) { return (t - 1) * (t - 1) + 2; }, 0.0, 3.0);
    CHECK(r.t == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.xi2 == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.unimodal);
  }
  SUBCASE("linear bracket") {
    const auto r = bsq::minimize_xi2_over_t([](double t) { return std::pow(t - 2.5, 4); }, 1.0, 3.0);
    CHECK(r.t == doctest::Approx(2.5).epsilon(1e-3));
  }
  SUBCASE("domain errors count as +inf") {
    const auto r = bsq::minimize_xi2_over_t(
        [](double t) {
          if (t > 1.5) throw bsq::DomainError("out");
          return (t - 1.4) * (t - 1.4);
        },
        0.0, 3.0);
    CHECK(r.t == doctest::Approx(1.4).epsilon(1e-5));
  }
  SUBCASE("several basins are flagged") {
    const auto r = bsq::minimize_xi2_over_t([](double t) { return std::cos(8 * t) + 0.01 * t; }, 0.5, 6.0);
    CHECK_FALSE(r.unimodal);
    CHECK(r.xi2 == doctest::Approx(-1.0 + 0.01 * 3 * std::numbers::pi / 8).epsilon(1e-3));
  }
  SUBCASE("bad bracket") {
    CHECK_THROWS_AS(bsq::minimize_xi2_over_t([](double t) { return t; }, 2.0, 1.0), bsq::ConfigError);
  }
}

TEST_CASE("the three squeezing routes converge at large N") {
  for (double c : {0.1, 1.0}) {
    double prev_spread = 1e300;
    for (double n : {1e3, 1e4, 1e5}) {
      const double chi = 1.0, g = 2.0 * c * chi * std::pow(n, -2.0 / 3.0);
      // keep C fixed: Gamma_sq = gamma for one-body losses; rescale chi instead of gamma
      const double chi_n = g / (2.0 * c);
      const double horizon = bsq::default_time_horizon(n, chi_n);
      const auto exact = bsq::minimize_xi2_over_t(
          [&](double t) { return bsq::xi2_one_body_exact(n, chi_n, g, t); }, 0.0, horizon);
      const auto rate = bsq::minimize_xi2_over_t(
          [&](double t) { return bsq::xi2_constant_rate(n, chi_n, {g, 0, 0}, t).xi2; }, 0.0, horizon);
      const auto asym = bsq::best_time_and_xi2({n, chi_n, g});
      const double hi = std::max({exact.xi2, rate.xi2, asym.xi2});
      const double lo = std::min({exact.xi2, rate.xi2, asym.xi2});
      const double spread = hi / lo - 1.0;
      CAPTURE(c);
      CAPTURE(n);
      CHECK(spread <= 3.0 * std::cbrt(1.0 / n));
      CHECK(spread < prev_spread);
      CHECK(exact.t / asym.t_best == doctest::Approx(1.0).epsilon(0.1));
      prev_spread = spread;
      (void)chi;
    }
  }
}

TEST_CASE("minimized constant-rate squeezing approaches the asymptotic optimum") {
  const double n = 1e4;
  for (double c : {0.0, 0.3, 3.0}) {
    const double chi = 1.0, gsq = 2 * c * chi;
    for (int m = 1; m <= 3; ++m) {
      bsq::LossRates g{0, 0, 0};
      g[m - 1] = gsq / (m * m * std::pow(0.5 * n, m - 1));
      const auto r = bsq::minimize_xi2_over_t([&](double t) { return bsq::xi2_constant_rate(n, chi, g, t).xi2; },
                                              0.0, bsq::default_time_horizon(n, chi));
      const auto asym = bsq::best_time_and_xi2({n, chi, bsq::gamma_sq(n, g)});
      CAPTURE(c);
      CAPTURE(m);
      CHECK(bsq::gamma_sq(n, g) == doctest::Approx(gsq).epsilon(1e-12));
      CHECK(r.xi2 == doctest::Approx(asym.xi2).epsilon(0.1));
      CHECK(r.t == doctest::Approx(asym.t_best).epsilon(0.1));
      if (c == 0.0) CHECK(r.xi2 == doctest::Approx(asym.xi2).epsilon(0.05));
    }
  }
}

TEST_CASE("survival under one-body loss") {
  const double xi2 = 0.01, n = 1e5, sx = 0.49 * n, g = 0.01;
  const auto at0 = bsq::survival_xi2(xi2, n, sx, g, 0.0);
  CHECK(at0.exact == doctest::Approx(xi2).epsilon(1e-14));
  CHECK(at0.approx == doctest::Approx(xi2).epsilon(1e-14));
  const auto late = bsq::survival_xi2(xi2, n, sx, g, 1e5);
  CHECK(late.approx == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(late.exact == doctest::Approx(0.25 * n * n / (sx * sx)).epsilon(1e-12));
  double prev = xi2;
  for (double t2 = 0.5; t2 < 50; t2 *= 1.5) {
    const auto s = bsq::survival_xi2(xi2, n, sx, g, t2);
    CHECK(s.exact > prev);
    CHECK(s.approx == doctest::Approx(1.0 - (1.0 - xi2) * std::exp(-g * t2)).epsilon(1e-14));
    prev = s.exact;
  }
  CHECK_THROWS_AS(bsq::survival_xi2(xi2, n, 0.0, g, 1.0), bsq::DomainError);
  CHECK_THROWS_AS(bsq::survival_xi2(xi2, n, sx, g, -1.0), bsq::ConfigError);
}

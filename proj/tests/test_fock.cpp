#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "brute_force.hpp"
#include "bsq/fock.hpp"

using bsq::cplx;

namespace {

constexpr double kPi = std::numbers::pi;

bsq::TwoModeSector random_state(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  std::vector<cplx> amps(static_cast<size_t>(n) + 1);
  for (auto& c : amps) c = {g(gen), g(gen)};
  return bsq::TwoModeSector(n, amps);
}

// Phase state twisted by H0 = chi S_z^2 for a time t.
bsq::TwoModeSector twisted(int n, double chi_t) {
  const auto ps = bsq::phase_state(n, 0.0);
  std::vector<cplx> amps(ps.amps().begin(), ps.amps().end());
  for (int k = 0; k <= n; ++k) {
    const double d = 2.0 * k - n;
    amps[static_cast<size_t>(k)] *= std::polar(1.0, -0.25 * chi_t * d * d);
  }
  return bsq::TwoModeSector(n, amps);
}

}  // namespace

TEST_CASE("phase state amplitudes for N = 2") {
  const auto s = bsq::phase_state(2, 0.0);
  CHECK(s[0].real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s[1].real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s[2].real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.norm2() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("phase state rejects fewer than two particles") {
  CHECK_THROWS_AS(bsq::phase_state(1, 0.0), bsq::ConfigError);
  CHECK_THROWS_AS(bsq::phase_state(0, 0.3), bsq::ConfigError);
}

TEST_CASE("phase state mean spin") {
  const auto m100 = bsq::moments(bsq::phase_state(100, 0.0));
  CHECK(m100.bdaga.real() == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(std::abs(m100.bdaga.imag()) < 1e-12);

  const bf::TwoModeOps ops(10);
  const auto psi = ops.embed(bsq::phase_state(10, kPi / 4));
  CHECK(std::abs(bf::expect(ops.sx(), psi)) < 1e-12);
  CHECK(bf::expect(ops.sy(), psi).real() == doctest::Approx(-5.0).epsilon(1e-12));
  const auto m = bsq::moments(bsq::phase_state(10, kPi / 4));
  CHECK(-m.bdaga.imag() == doctest::Approx(-5.0).epsilon(1e-12));
}

TEST_CASE("unsqueezed phase state") {
  for (int n : {2, 7, 40, 1000}) {
    const auto m = bsq::moments(bsq::phase_state(n, 0.0));
    CHECK(m.adaga == doctest::Approx(n / 2.0));
    CHECK(std::abs(m.quad_A) < 1e-9 * n * n);
    CHECK(std::abs(m.quad_B) < 1e-9 * n * n);
    CHECK(m.var_sz == doctest::Approx(n / 4.0).epsilon(1e-10));
    const auto r = bsq::xi2_from_moments(m);
    CHECK(r.xi2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.xi2_direct == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("moments agree with dense operator matrices") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 2 + trial % 6;
    const auto s = random_state(n, gen);
    const bf::TwoModeOps ops(n);
    const auto psi = ops.embed(s);
    const auto m = bsq::moments(s);
    const bf::Mat ad = ops.ad(), bd = ops.bd();
    CAPTURE(n);
    CHECK(m.n_mean == doctest::Approx(bf::expect(ops.number(), psi).real()).epsilon(1e-12));
    CHECK(m.adaga == doctest::Approx(bf::expect(ad * ops.a, psi).real()).epsilon(1e-12));
    const cplx bdaga = bf::expect(bd * ops.a, psi);
    CHECK(std::abs(m.bdaga - bdaga) < 1e-12 * n);
    const double quad_a = 0.5 * bf::expect(bd * ad * ops.a * ops.b - bd * bd * ops.a * ops.a, psi).real();
    CHECK(m.quad_A == doctest::Approx(quad_a).epsilon(1e-11).scale(n));
    const double quad_b = 2.0 * bf::expect(bd * bd * ops.b * ops.a, psi).imag();
    CHECK(m.quad_B == doctest::Approx(quad_b).epsilon(1e-11).scale(n));
    const double sz = bf::expect(ops.sz(), psi).real();
    const double sz2 = bf::expect(ops.sz() * ops.sz(), psi).real();
    CHECK(m.sz_mean == doctest::Approx(sz).epsilon(1e-12).scale(n));
    CHECK(m.var_sz == doctest::Approx(sz2 - sz * sz).epsilon(1e-11).scale(n));
    // <S_y^2> = <N>/4 + A for every state
    CHECK(bf::expect(ops.sy() * ops.sy(), psi).real() ==
          doctest::Approx(0.25 * m.n_mean + m.quad_A).epsilon(1e-11).scale(n));
  }
}

TEST_CASE("moments are invariant under global phase and rescaling") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = random_state(9, gen);
    std::vector<cplx> scaled(s.amps().begin(), s.amps().end());
    for (auto& c : scaled) c *= std::polar(3.7, 1.1 * trial);
    const auto m1 = bsq::moments(s);
    const auto m2 = bsq::moments(bsq::TwoModeSector(9, scaled));
    CHECK(m1.adaga == doctest::Approx(m2.adaga).epsilon(1e-12));
    CHECK(std::abs(m1.bdaga - m2.bdaga) < 1e-12 * 9);
    CHECK(m1.quad_A == doctest::Approx(m2.quad_A).epsilon(1e-12));
    CHECK(m1.quad_B == doctest::Approx(m2.quad_B).epsilon(1e-12));
    CHECK(m1.var_sz == doctest::Approx(m2.var_sz).epsilon(1e-12));
  }
}

TEST_CASE("mode exchange flips S_z and conjugates the coherence") {
  std::mt19937_64 gen(17);
  const auto s = random_state(8, gen);
  std::vector<cplx> swapped(s.amps().rbegin(), s.amps().rend());
  const auto m = bsq::moments(s);
  const auto w = bsq::moments(bsq::TwoModeSector(8, swapped));
  CHECK(w.sz_mean == doctest::Approx(-m.sz_mean).epsilon(1e-12));
  CHECK(w.var_sz == doctest::Approx(m.var_sz).epsilon(1e-12));
  CHECK(w.adaga == doctest::Approx(m.n_mean - m.adaga).epsilon(1e-12));
  CHECK(std::abs(w.bdaga - std::conj(m.bdaga)) < 1e-12);
}

TEST_CASE("lossless twisting matches the one-axis-twisting closed forms") {
  for (int n : {4, 10, 25}) {
    for (double x : {0.05, 0.2, 0.3}) {
      const auto m = bsq::moments(twisted(n, x));
      const double nn1 = n * (n - 1.0);
      CAPTURE(n);
      CAPTURE(x);
      CHECK(m.bdaga.real() == doctest::Approx(0.5 * n * std::pow(std::cos(x), n - 1)).epsilon(1e-12));
      CHECK(m.quad_A == doctest::Approx(nn1 / 8.0 * (1.0 - std::pow(std::cos(2 * x), n - 2))).epsilon(1e-11));
      CHECK(m.quad_B == doctest::Approx(nn1 / 2.0 * std::sin(x) * std::pow(std::cos(x), n - 2)).epsilon(1e-11));
    }
  }
}

TEST_CASE("reduced and covariance routes agree with a direct angle minimization") {
  for (int n : {6, 12}) {
    for (double x : {0.02, 0.1, 0.25}) {
      const auto s = twisted(n, x);
      const bf::TwoModeOps ops(n);
      const auto psi = ops.embed(s);
      const bf::Mat sy = ops.sy(), sz = ops.sz();
      const double my = bf::expect(sy, psi).real(), mz = bf::expect(sz, psi).real();
      const double vyy = bf::expect(sy * sy, psi).real() - my * my;
      const double vzz = bf::expect(sz * sz, psi).real() - mz * mz;
      const double vyz = 0.5 * bf::expect(sy * sz + sz * sy, psi).real() - my * mz;
      double best = 1e300;
      for (int i = 0; i < 200000; ++i) {
        const double th = kPi * i / 200000.0, c = std::cos(th), sn = std::sin(th);
        best = std::min(best, c * c * vyy + sn * sn * vzz + 2.0 * c * sn * vyz);
      }
      const double sx = bf::expect(ops.sx(), psi).real();
      const double oracle = n * best / (sx * sx);
      const auto r = bsq::xi2_from_moments(bsq::moments(s));
      CAPTURE(n);
      CAPTURE(x);
      CHECK(r.xi2_direct == doctest::Approx(oracle).epsilon(1e-6));
      CHECK(r.xi2 == doctest::Approx(oracle).epsilon(1e-6));
      CHECK(r.xi2 < 1.0);
    }
  }
}

TEST_CASE("both squeezing routes coincide when Var S_z = <N>/4 and <a^+a> = <N>/2") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    bsq::MomentSet m;
    m.n_mean = 10.0 + 1000.0 * std::abs(u(gen));
    m.adaga = 0.5 * m.n_mean;
    m.var_sz = 0.25 * m.n_mean;
    m.bdaga = {0.5 * m.n_mean * (0.2 + 0.8 * std::abs(u(gen))), 0.0};
    // keep the covariance matrix positive: A > -N/4 and B^2 / 4 <= (N/4 + A) N/4
    m.quad_A = m.n_mean * m.n_mean * 0.1 * std::abs(u(gen)) - 0.2 * m.n_mean * std::abs(u(gen));
    const double bmax = 2.0 * std::sqrt((0.25 * m.n_mean + m.quad_A) * 0.25 * m.n_mean);
    m.quad_B = bmax * u(gen);
    const auto r = bsq::xi2_from_moments(m);
    CHECK(r.xi2 == doctest::Approx(r.xi2_direct).epsilon(1e-12));
  }
}

TEST_CASE("pure covariance squeezing picks a diagonal axis") {
  bsq::MomentSet m;
  m.n_mean = 20.0;
  m.adaga = 10.0;
  m.var_sz = 5.0;
  m.bdaga = {9.0, 0.0};
  m.quad_A = 0.0;
  m.quad_B = 4.0;
  const auto r = bsq::xi2_from_moments(m);
  CHECK(std::abs(std::abs(r.theta_min) - kPi / 4) < 1e-12);
  CHECK(r.xi2 == doctest::Approx(10.0 * (10.0 - 4.0) / 81.0).epsilon(1e-14));
  CHECK(r.xi2 < 1.0);
}

TEST_CASE("collapsed mean spin is a domain error") {
  bsq::MomentSet m;
  m.n_mean = 100.0;
  m.adaga = 50.0;
  m.var_sz = 25.0;
  m.bdaga = {1e-8, 3.0};
  CHECK_THROWS_AS(bsq::xi2_from_moments(m), bsq::DomainError);
  m.bdaga = {0.0, 0.0};
  CHECK_THROWS_AS(bsq::xi2_from_moments(m), bsq::DomainError);
  CHECK_THROWS_AS(bsq::xi2_from_moments(bsq::moments(bsq::phase_state(10, kPi / 4))), bsq::DomainError);
}

TEST_CASE("sector construction is validated") {
  CHECK_THROWS_AS(bsq::TwoModeSector(3, std::vector<cplx>(3)), bsq::ConfigError);
  CHECK_THROWS_AS(bsq::TwoModeSector(-1, std::vector<cplx>{}), bsq::ConfigError);
  CHECK_THROWS_AS(bsq::TwoModeSector(2, std::vector<cplx>(3)).normalized(), bsq::DomainError);
  CHECK(bsq::falling_factorial(5, 3) == 60.0);
  CHECK(bsq::falling_factorial(2, 3) == 0.0);
  CHECK(bsq::falling_factorial(4, 0) == 1.0);
}

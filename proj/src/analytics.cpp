#include "bsq/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace bsq {

namespace {

/// sin(z)/z - 1 without cancellation for small z.
double sinc_minus_one(double z) {
  if (std::abs(z) < 0.1) {
    const double z2 = z * z;
    return z2 * (-1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 * (-1.0 / 5040.0 + z2 / 362880.0)));
  }
  return std::sin(z) / z - 1.0;
}

/// ln cos(y), accurate near y = 0.
double log_cos(double y) {
  const double s = std::sin(0.5 * y);
  return std::log1p(-2.0 * s * s);
}

/// sin(m y) / (m y cos^m y) - 1; zero at y = 0.
double sinc_ratio_minus_one(int m, double y) {
  if (y == 0.0) return 0.0;
  return std::expm1(std::log1p(sinc_minus_one(m * y)) - m * log_cos(y));
}

struct ScaledTerms {
  double excess = 0.0;  // sum_m w_m e^{alpha m} - shift
  double g = 0.0;
  double h = 0.0;
};

/// Exponent and derivative sums of F_beta at alpha, minus sum_m 2 gamma_m t e^{alpha m}.
ScaledTerms f_terms(int beta, double alpha, const LossRates& gammas, double chi, double t,
                    double cos_floor) {
  if (beta < 0 || beta > 2) throw ConfigError("F_beta defined for beta in {0, 1, 2}");
  const double y = beta * chi * t;
  if (beta != 0 && !(std::cos(y) > cos_floor))
    throw DomainError("F_beta outside its domain: cos(beta chi t) = " + std::to_string(std::cos(y)));
  ScaledTerms out;
  for (int m = 1; m <= 3; ++m) {
    if (gammas[m - 1] == 0.0) continue;
    const double base = 2.0 * gammas[m - 1] * t * std::exp(alpha * m);
    const double ratio_m1 = beta == 0 ? 0.0 : sinc_ratio_minus_one(m, y);
    const double w = base * (1.0 + ratio_m1);
    out.excess += base * ratio_m1;
    out.g += m * w;
    out.h += m * m * w;
  }
  return out;
}

void check_rates(const LossRates& gammas) {
  for (double g : gammas)
    if (!(g >= 0.0)) throw ConfigError("loss rates must be >= 0");
}

}  // namespace

double xi2_one_body_exact(double n, double chi, double gamma, double t) {
  if (!(n >= 2.0)) throw ConfigError("exact one-body formula needs N >= 2");
  if (!(chi >= 0.0) || !(gamma >= 0.0) || !(t >= 0.0))
    throw ConfigError("exact one-body formula needs chi, gamma, t >= 0");
  if (t == 0.0 || chi == 0.0) return 1.0;

  const double x = chi * t;
  const double decay = std::exp(-gamma * t);
  const double decay_m1 = std::expm1(-gamma * t);
  const double g2 = gamma * gamma;

  // Base of the (2N-2) power, written as 1 + delta1 / den1.
  const double den1 = g2 + chi * chi;
  const double s_half = std::sin(0.5 * x);
  const double delta1 =
      chi * gamma * std::sin(x) * decay + chi * chi * (std::cos(x) * decay_m1 - 2.0 * s_half * s_half);
  const double rel1 = delta1 / den1;
  if (!(rel1 > -1.0))
    throw DomainError("exact formula outside its positive-bracket domain at chi t = " +
                      std::to_string(x));
  const double log_base1 = std::log1p(rel1);

  const double den2 = g2 + 4.0 * chi * chi;
  const double s1 = std::sin(x);
  const double delta2 = 2.0 * chi * gamma * std::sin(2.0 * x) * decay +
                        4.0 * chi * chi * (std::cos(2.0 * x) * decay_m1 - 2.0 * s1 * s1);
  const double rel2 = delta2 / den2;
  double a_tilde;
  if (rel2 > -1.0) {
    a_tilde = -std::expm1((n - 2.0) * std::log1p(rel2));
  } else {
    a_tilde = 1.0 - std::pow(1.0 + rel2, n - 2.0);
    if (!std::isfinite(a_tilde))
      throw DomainError("exact formula: negative base with non-integer power");
  }
  const double b_tilde = 4.0 * s1 * std::exp((n - 2.0) * log_base1);

  const double root = std::hypot(a_tilde, b_tilde);
  const double diff = a_tilde > 0.0 ? -b_tilde * b_tilde / (a_tilde + root) : a_tilde - root;
  const double numer = 1.0 + 0.25 * (n - 1.0) * decay * diff;
  return numer * std::exp(-(2.0 * n - 2.0) * log_base1);
}

FDerivatives f_log_derivatives(int beta, double alpha, const LossRates& gammas, double chi,
                               double t, double cos_floor) {
  check_rates(gammas);
  const auto terms = f_terms(beta, alpha, gammas, chi, t, cos_floor);
  double shift = 0.0;
  for (int m = 1; m <= 3; ++m) shift += 2.0 * gammas[m - 1] * t * std::exp(alpha * m);
  FDerivatives d;
  d.f = std::exp(terms.excess + shift);
  d.df = d.f * terms.g;
  d.d2f = d.f * (terms.g * terms.g + terms.h);
  return d;
}

std::array<double, 3> lost_fraction_rates(double n, const LossRates& gammas) {
  std::array<double, 3> out{};
  for (int m = 1; m <= 3; ++m) out[m - 1] = std::pow(0.5 * n, m - 1) * m * gammas[m - 1];
  return out;
}

double gamma_sq(double n, const LossRates& gammas) {
  const auto rates = lost_fraction_rates(n, gammas);
  return rates[0] + 2.0 * rates[1] + 3.0 * rates[2];
}

MomentSet moments_constant_rate(double n, double chi, const LossRates& gammas, double t,
                                double cos_floor) {
  if (!(n >= 2.0)) throw ConfigError("constant-rate moments need N >= 2");
  if (!(chi >= 0.0) || !(t >= 0.0)) throw ConfigError("constant-rate moments need chi, t >= 0");
  check_rates(gammas);
  const double x = chi * t;
  if (!(x < 0.25 * std::numbers::pi))
    throw DomainError("constant-rate formulas need chi t < pi/4 (got " + std::to_string(x) + ")");

  const auto lost = lost_fraction_rates(n, gammas);
  const double lost_fraction = (lost[0] + lost[1] + lost[2]) * t;
  if (!(lost_fraction < 1.0))
    throw DomainError("lost fraction " + std::to_string(lost_fraction) +
                      " >= 1 breaks the constant-rate approximation");

  // All F_beta are scaled by e^{-lambda t}; with lambda = 2 sum_m gamma_m (N/2)^m this
  // cancels the beta = 0 exponent exactly, so only the excess over it is exponentiated.
  const double alpha = std::log(0.5 * n);
  const auto apply_n = [&](const ScaledTerms& s) {
    return (n - s.g) * (n - 1.0 - s.g) + s.h;  // (N - d)(N - 1 - d) F / F
  };
  const auto t0 = f_terms(0, alpha, gammas, chi, t, cos_floor);
  const auto t1 = f_terms(1, alpha, gammas, chi, t, cos_floor);
  const auto t2 = f_terms(2, alpha, gammas, chi, t, cos_floor);
  const double f0 = std::exp(t0.excess), f1 = std::exp(t1.excess), f2 = std::exp(t2.excess);

  const double lc1 = log_cos(x);
  const double lc2 = log_cos(2.0 * x);
  const double cos_n1 = std::exp((n - 1.0) * lc1);
  const double cos_n2 = std::exp((n - 2.0) * lc1);
  const double cos2_n2 = std::exp((n - 2.0) * lc2);

  MomentSet m;
  m.n_mean = n * (1.0 - lost_fraction);
  m.adaga = 0.5 * m.n_mean;
  m.var_sz = 0.25 * m.n_mean;
  m.sz_mean = 0.0;
  m.bdaga = {0.5 * cos_n1 * f1 * (n - t1.g), 0.0};
  m.quad_A = 0.125 * (f0 * apply_n(t0) - cos2_n2 * f2 * apply_n(t2));
  m.quad_B = 0.5 * cos_n2 * std::sin(x) * f1 * apply_n(t1);
  return m;
}

SqueezingResult xi2_constant_rate(double n, double chi, const LossRates& gammas, double t) {
  return xi2_from_moments(moments_constant_rate(n, chi, gammas, t));
}

double xi2_lossless_asymptotic(double n, double chi, double t) {
  if (!(t > 0.0)) throw ConfigError("asymptotic expansion needs t > 0");
  const double x = chi * t;
  const double nx = n * x;
  return 1.0 / (nx * nx) + nx * nx * x * x / 6.0;
}

double xi2_asymptotic(double n, double chi, double gsq, double t) {
  return xi2_lossless_asymptotic(n, chi, t) + gsq * t / 3.0;
}

double xi2_penalty_form(double n, double chi, double gsq, double t) {
  const double xi0 = xi2_lossless_asymptotic(n, chi, t);
  return xi0 * (1.0 + gsq * t / (3.0 * xi0));
}

double squeezing_shape(double c) {
  // 12 / (sqrt(C^2 + 12) + C) is the same root without cancellation at large C
  return 12.0 / (std::sqrt(c * c + 12.0) + c);
}

BestSqueezing best_time_and_xi2(const AsymptoticInputs& in) {
  if (!(in.chi > 0.0)) throw ConfigError("best squeezing time needs chi > 0");
  if (!(in.n_init > 0.0)) throw ConfigError("best squeezing time needs N > 0");
  const double c = in.c_param();
  const double f = squeezing_shape(c);
  const double f13 = std::cbrt(f);
  BestSqueezing out;
  out.t_best = std::cbrt(0.5 * f) * std::pow(in.n_init, -2.0 / 3.0) / in.chi;
  out.xi2 = (1.0 / (f13 * f13) + f13 * f13 * f13 * f13 / 24.0 + c * f13 / 3.0) *
            std::pow(2.0 / in.n_init, 2.0 / 3.0);
  return out;
}

double default_time_horizon(double n, double chi) {
  return std::min(8.0 * std::pow(n, -2.0 / 3.0), 0.75) / chi;
}

TimeMinimum minimize_xi2_over_t(const std::function<double(double)>& curve, double lo, double hi,
                                double rel_tol, int n_scan) {
  if (!(hi > lo) || !(lo >= 0.0)) throw ConfigError("minimization bracket must satisfy 0 <= lo < hi");
  if (n_scan < 3) throw ConfigError("pre-scan needs at least 3 points");
  const auto eval = [&](double t) {
    try {
      const double v = curve(t);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<double> ts(n_scan), vs(n_scan);
  for (int i = 0; i < n_scan; ++i) {
    const double u = static_cast<double>(i + 1) / n_scan;
    ts[i] = lo == 0.0 ? hi * std::pow(1e-4, 1.0 - u) : lo + (hi - lo) * u;
    vs[i] = eval(ts[i]);
  }
  const auto best = static_cast<int>(std::min_element(vs.begin(), vs.end()) - vs.begin());
  int local_minima = 0;
  for (int i = 0; i < n_scan; ++i) {
    const bool left_ok = i == 0 || vs[i] < vs[i - 1];
    const bool right_ok = i == n_scan - 1 || vs[i] <= vs[i + 1];
    if (left_ok && right_ok && std::isfinite(vs[i])) ++local_minima;
  }

  double a = best == 0 ? (lo == 0.0 ? 0.0 : lo) : ts[best - 1];
  double b = best == n_scan - 1 ? hi : ts[best + 1];
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int iter = 0; iter < 500 && (b - a) > rel_tol * std::abs(0.5 * (a + b)); ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  TimeMinimum out;
  out.t = fc < fd ? c : d;
  out.xi2 = std::min(fc, fd);
  if (vs[best] < out.xi2) {
    out.t = ts[best];
    out.xi2 = vs[best];
  }
  out.unimodal = local_minima == 1;
  return out;
}

SurvivalXi2 survival_xi2(double xi2_t1, double n_mean_t1, double sx_t1, double gamma1, double t2) {
  if (sx_t1 == 0.0) throw DomainError("survival formula needs a nonzero mean spin <S_x(T1)>");
  if (!(gamma1 >= 0.0) || !(t2 >= 0.0)) throw ConfigError("survival needs gamma1 >= 0 and T2 >= 0");
  const double decay = std::exp(-gamma1 * t2);
  const double ratio = 0.25 * n_mean_t1 * n_mean_t1 / (sx_t1 * sx_t1);
  SurvivalXi2 out;
  out.exact = ratio - (ratio - xi2_t1) * decay;
  out.approx = 1.0 - (1.0 - xi2_t1) * decay;
  return out;
}

}  // namespace bsq

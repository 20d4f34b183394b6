#pragma once

#include <array>
#include <functional>

#include "bsq/fock.hpp"

namespace bsq {

/// Loss rates gamma^(1..3) in s^-1.
using LossRates = std::array<double, 3>;

/// Squeezing under one-body losses only, valid at all times. Large powers
/// are evaluated in log space. Throws DomainError when the base of the
/// (2N-2)-th power is not positive.
double xi2_one_body_exact(double n, double chi, double gamma1, double t);

struct FDerivatives {
  double f = 1.0;
  double df = 0.0;
  double d2f = 0.0;
};

/// Generating function F_beta(alpha) = exp(sum_m w_m e^{alpha m}) with
/// w_m = 2 gamma_m t sin(m beta chi t) / (m beta chi t cos^m(beta chi t)),
/// and its first two alpha-derivatives: F' = F g, F'' = F (g^2 + h) where
/// g = sum m w_m e^{alpha m}, h = sum m^2 w_m e^{alpha m}.
FDerivatives f_log_derivatives(int beta, double alpha, const LossRates& gammas, double chi,
                               double t, double cos_floor = 1e-3);

/// Lost-fraction rates Gamma^(m) = (N/2)^{m-1} m gamma^(m).
std::array<double, 3> lost_fraction_rates(double n, const LossRates& gammas);

/// Gamma_sq = sum_m m Gamma^(m).
double gamma_sq(double n, const LossRates& gammas);

/// Moments in the constant-loss-rate approximation, with the operator
/// (N - d/d alpha) applied through exact closed-form derivatives of F_beta
/// at alpha = ln(N/2). Requires chi t < pi/4 and a lost fraction below 1.
MomentSet moments_constant_rate(double n, double chi, const LossRates& gammas, double t,
                                double cos_floor = 1e-3);

SqueezingResult xi2_constant_rate(double n, double chi, const LossRates& gammas, double t);

struct AsymptoticInputs {
  double n_init = 0.0;
  double chi = 0.0;
  double gamma_sq = 0.0;

  double c_param() const { return gamma_sq / (2.0 * chi); }
};

/// Large-N expansion 1/(N chi t)^2 + N^2 (chi t)^4 / 6 + Gamma_sq t / 3.
double xi2_asymptotic(double n, double chi, double gamma_sq, double t);
/// Lossless part of the expansion.
double xi2_lossless_asymptotic(double n, double chi, double t);
/// The same expansion written as xi0^2 (1 + Gamma_sq t / (3 xi0^2)).
double xi2_penalty_form(double n, double chi, double gamma_sq, double t);

/// f(C) = sqrt(C^2 + 12) - C, the positive root of f^2 + 2 C f - 12 = 0.
double squeezing_shape(double c);

struct BestSqueezing {
  double t_best = 0.0;
  double xi2 = 0.0;
};

BestSqueezing best_time_and_xi2(const AsymptoticInputs& in);

struct TimeMinimum {
  double t = 0.0;
  double xi2 = 0.0;
  bool unimodal = true;  // false: the pre-scan saw several local minima
};

/// Golden-section minimization of a squeezing curve over (lo, hi]. A
/// pre-scan (log-spaced when lo == 0) locates the basin; points where the
/// curve throws DomainError count as +inf.
TimeMinimum minimize_xi2_over_t(const std::function<double(double)>& curve, double lo, double hi,
                                double rel_tol = 1e-6, int n_scan = 96);

/// Search interval for the best squeezing time: a few lossless optima, capped
/// below the chi t < pi/4 limit of the constant-rate formulas.
double default_time_horizon(double n, double chi);

struct SurvivalXi2 {
  double exact = 0.0;
  double approx = 0.0;
};

/// Squeezing after T2 of pure one-body loss with interactions switched off.
SurvivalXi2 survival_xi2(double xi2_t1, double n_mean_t1, double sx_t1, double gamma1, double t2);

}  // namespace bsq

#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "bsq/analytics.hpp"
#include "bsq/fock.hpp"

namespace bsq {

inline constexpr double kHbar = 1.054571817e-34;  // J s
inline constexpr double kRb87Mass = 1.443e-25;    // kg

/// Laboratory inputs, SI units: k1 in s^-1, k2 in m^3/s, k3 in m^6/s.
struct PhysicalParams {
  double mass = kRb87Mass;
  double a_scatt = 0.0;
  double omega_bar = 0.0;  // rad/s
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double n_init = 0.0;

  void validate() const;
};

/// Model constants of a Thomas-Fermi condensate. n is kept continuous.
struct TfModel {
  double n = 0.0;
  double mu = 0.0;  // chemical potential, J
  double chi = 0.0;
  std::array<double, 3> lost_rate{};  // Gamma^(m), s^-1
  LossRates gamma{};                  // gamma^(m) = Gamma^(m) / (m (N/2)^{m-1})

  double gamma_sq() const { return lost_rate[0] + 2.0 * lost_rate[1] + 3.0 * lost_rate[2]; }
  double c_param() const { return gamma_sq() / (2.0 * chi); }
  /// Rounded atom number with the model rates, for the stochastic engines.
  ModelParams to_model() const;
};

TfModel tf_map(const PhysicalParams& p);

/// Trap frequency minimizing C at fixed N (where 3 Gamma^(3) = Gamma^(1)).
/// Throws DomainError when k1 or k3 vanishes.
double omega_opt(const PhysicalParams& p);

/// N -> infinity lower bound of the optimized squeezing.
double xi2_floor(const PhysicalParams& p);

struct Optimum {
  double omega_opt = 0.0;
  double n_eta = 0.0;
  double t_best = 0.0;
  double xi2 = 0.0;
  double xi2_floor = 0.0;
  double chi = 0.0;
  std::array<double, 3> lost_rate{};
  double c_param = 0.0;
  double f_c = 0.0;
  double lost_fraction = 0.0;  // sum_m Gamma^(m) t_best
  bool lost_fraction_warning = false;
};

/// Squeezing at the best time with omega_bar set to omega_opt(N).
Optimum optimum_at_n(const PhysicalParams& p, double n);

/// Chooses N so that the optimized squeezing is (1 + eta) times the floor.
Optimum optimize_all(const PhysicalParams& p, double eta);

/// Closed forms for k2 = 0 at eta = 10%, with their published coefficients.
struct ClosedFormOptimum {
  double n_eta = 0.0;
  double t_best = 0.0;
  double xi2 = 0.0;
};
ClosedFormOptimum closed_form_k2_zero(const PhysicalParams& p);

struct LossMask {
  bool one_body = false;
  bool two_body = false;
  bool three_body = false;
};

struct ScanRow {
  double n = 0.0;
  double chi = 0.0;
  double c_param = 0.0;
  double t_best = 0.0;  // asymptotic optimum
  double xi2_best = 0.0;
  double t_numeric = 0.0;  // minimized constant-rate curve; NaN outside its domain
  double xi2_numeric = 0.0;
  double lost_fraction = 0.0;
};

std::vector<ScanRow> scan_n(const PhysicalParams& p, const std::vector<double>& n_grid,
                            LossMask mask, bool numeric = true);

struct K3Point {
  double b_gauss = 0.0;
  double k3 = 0.0;
};

/// Reads `B_gauss,K3_m6_per_s` CSV; `#` lines and blank lines are skipped.
std::vector<K3Point> read_k3_table(std::istream& in);

struct FeshbachModel {
  double a_bg = 5.32e-9;
  double delta_b = 0.21;   // G
  double b_res = 1007.4;   // G

  double scattering_length(double b_gauss) const;
};

struct FeshbachRow {
  double b_gauss = 0.0;
  double a_scatt = 0.0;
  double k3 = 0.0;
  bool skipped = false;  // a(B) <= 0
  Optimum opt;
};

std::vector<FeshbachRow> feshbach_scan(const std::vector<K3Point>& table,
                                       const FeshbachModel& model, const PhysicalParams& base,
                                       double eta);

}  // namespace bsq

#pragma once

#include <array>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsq {

using cplx = std::complex<double>;

/// Raised when an input lies outside the region where a formula or model is
/// defined (e.g. vanishing mean spin, negative bracket of a closed form).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for invalid parameters or configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two-mode model constants. Rates are in s^-1: chi is the one-axis twisting
/// frequency of H0 = hbar*chi/4 (a^+a - b^+b)^2 and gamma[m-1] the m-body
/// loss rate entering the jump operators sqrt(gamma) c^m.
struct ModelParams {
  int n_init = 2;
  double chi = 0.0;
  std::array<double, 3> gamma{0.0, 0.0, 0.0};

  void validate() const;
};

/// Pure state confined to the sector of fixed total particle number n_tot.
/// amps[k] is the amplitude of |n_a = k, n_b = n_tot - k>. The state is not
/// necessarily normalized: between quantum jumps its squared norm decays.
class TwoModeSector {
 public:
  TwoModeSector(int n_tot, std::vector<cplx> amps, double t_ref = 0.0);

  int n_tot() const { return n_tot_; }
  std::span<const cplx> amps() const { return amps_; }
  const cplx& operator[](int n_a) const { return amps_[static_cast<size_t>(n_a)]; }
  double t_ref() const { return t_ref_; }

  double norm2() const;
  TwoModeSector normalized() const;

 private:
  int n_tot_;
  std::vector<cplx> amps_;
  double t_ref_;
};

/// Normalized expectation values of the operators needed for squeezing.
///
/// quad_A = Re<b^+a^+ab - b^+b^+aa>/2, quad_B = 2 Im<b^+b^+ba>. sz_mean is
/// kept alongside var_sz so ensembles can be averaged through the linear
/// moments <S_z>, <S_z^2>.
struct MomentSet {
  double n_mean = 0.0;
  double adaga = 0.0;
  cplx bdaga{0.0, 0.0};
  double quad_A = 0.0;
  double quad_B = 0.0;
  double var_sz = 0.0;
  double sz_mean = 0.0;
};

struct SqueezingResult {
  double xi2 = 1.0;         // reduced form using <a^+a>, A, B
  double xi2_direct = 1.0;  // minimum over theta of the (S_y, S_z) covariance
  double theta_min = 0.0;
  double sx_mean = 0.0;
  MomentSet diagnostics;
};

/// Phase state with relative phase phi: e^{+i phi} on mode a, e^{-i phi} on
/// mode b. With this convention <b^+a> = (N/2) e^{2 i phi}, so
/// <S_x> = (N/2) cos 2phi and <S_y> = -(N/2) sin 2phi.
TwoModeSector phase_state(int n, double phi);

MomentSet moments(const TwoModeSector& state);

/// Squeezing parameter from moments. Throws DomainError when the mean spin
/// has collapsed (|Re<b^+a>| < 1e-9 * <N>).
SqueezingResult xi2_from_moments(const MomentSet& m);

/// n!/(n-m)!, zero when n < m.
double falling_factorial(int n, int m);

}  // namespace bsq

#include "bsq/fock.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bsq {

void ModelParams::validate() const {
  std::ostringstream err;
  if (n_init < 2) {
    err << "n_init must be >= 2 (got " << n_init << ")";
  } else if (!(chi >= 0.0) || !std::isfinite(chi)) {
    err << "chi must be finite and >= 0 (got " << chi << ")";
  } else {
    for (int m = 0; m < 3; ++m) {
      if (!(gamma[m] >= 0.0) || !std::isfinite(gamma[m])) {
        err << "gamma" << (m + 1) << " must be finite and >= 0 (got " << gamma[m] << ")";
        break;
      }
    }
  }
  if (!err.str().empty()) throw ConfigError(err.str());
}

TwoModeSector::TwoModeSector(int n_tot, std::vector<cplx> amps, double t_ref)
    : n_tot_(n_tot), amps_(std::move(amps)), t_ref_(t_ref) {
  if (n_tot_ < 0) throw ConfigError("sector particle number must be >= 0");
  if (amps_.size() != static_cast<size_t>(n_tot_) + 1)
    throw ConfigError("amplitude count must equal n_tot + 1");
  for (const auto& c : amps_)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw DomainError("non-finite amplitude in two-mode state");
}

double TwoModeSector::norm2() const {
  double s = 0.0;
  for (const auto& c : amps_) s += std::norm(c);
  return s;
}

TwoModeSector TwoModeSector::normalized() const {
  const double n2 = norm2();
  if (!(n2 > 0.0)) throw DomainError("cannot normalize a zero-norm state");
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<cplx> out(amps_);
  for (auto& c : out) c *= inv;
  return TwoModeSector(n_tot_, std::move(out), t_ref_);
}

double falling_factorial(int n, int m) {
  if (n < m) return 0.0;
  double r = 1.0;
  for (int k = 0; k < m; ++k) r *= static_cast<double>(n - k);
  return r;
}

TwoModeSector phase_state(int n, double phi) {
  if (n < 2) throw ConfigError("phase state needs at least two particles (got " + std::to_string(n) + ")");
  std::vector<cplx> amps(static_cast<size_t>(n) + 1);
  const double log_norm = std::lgamma(n + 1.0) - n * std::numbers::ln2;
  for (int k = 0; k <= n; ++k) {
    const double log_mag = 0.5 * (log_norm - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    amps[static_cast<size_t>(k)] = std::polar(std::exp(log_mag), phi * (2.0 * k - n));
  }
  return TwoModeSector(n, std::move(amps));
}

MomentSet moments(const TwoModeSector& state) {
  const double n2 = state.norm2();
  if (!(n2 > 0.0)) throw DomainError("moments of a zero-norm state");

  const int n = state.n_tot();
  const auto c = state.amps();
  double adaga = 0.0, ab = 0.0, sz = 0.0, sz2 = 0.0;
  cplx bdaga{}, pair{}, bbba{};
  for (int na = 0; na <= n; ++na) {
    const int nb = n - na;
    const double p = std::norm(c[na]);
    const double d = 0.5 * (na - nb);
    adaga += p * na;
    ab += p * na * nb;
    sz += p * d;
    sz2 += p * d * d;
    if (na >= 1) {
      // b^+ a |na, nb> = sqrt(na (nb+1)) |na-1, nb+1>
      const cplx w = std::conj(c[na - 1]) * c[na] * std::sqrt(double(na) * (nb + 1));
      bdaga += w;
      bbba += w * double(nb);
    }
    if (na >= 2) {
      pair += std::conj(c[na - 2]) * c[na] *
              std::sqrt(double(na) * (na - 1) * (nb + 1) * (nb + 2));
    }
  }

  MomentSet m;
  m.n_mean = n;
  m.adaga = adaga / n2;
  m.bdaga = bdaga / n2;
  m.quad_A = 0.5 * (ab - pair.real()) / n2;
  m.quad_B = 2.0 * bbba.imag() / n2;
  m.sz_mean = sz / n2;
  m.var_sz = std::max(0.0, sz2 / n2 - m.sz_mean * m.sz_mean);
  return m;
}

SqueezingResult xi2_from_moments(const MomentSet& m) {
  const double sx = m.bdaga.real();
  if (!(std::abs(sx) >= 1e-9 * m.n_mean) || sx == 0.0)
    throw DomainError("mean spin collapsed: |<S_x>| = " + std::to_string(std::abs(sx)) +
                      " for <N> = " + std::to_string(m.n_mean));

  const double a = m.quad_A, b = m.quad_B;
  const double root = std::hypot(a, b);
  // a + A - sqrt(A^2 + B^2), rewritten to avoid cancellation when A > 0
  const double reduced = a > 0.0 ? m.adaga - b * b / (a + root) : m.adaga + a - root;

  SqueezingResult r;
  r.sx_mean = sx;
  r.diagnostics = m;
  r.xi2 = m.adaga * reduced / (sx * sx);

  // Covariance of (S_y, S_z) with Var S_y = <N>/4 + A and Cov = B/2.
  const double vyy = 0.25 * m.n_mean + a;
  const double vzz = m.var_sz;
  const double vyz = 0.5 * b;
  const auto var_at = [&](double th) {
    const double cs = std::cos(th), sn = std::sin(th);
    return cs * cs * vyy + sn * sn * vzz + 2.0 * sn * cs * vyz;
  };
  const double theta0 = 0.5 * std::atan2(2.0 * vyz, vyy - vzz);
  double theta = theta0 + 0.5 * std::numbers::pi;
  if (var_at(theta0) < var_at(theta)) theta = theta0;
  if (theta > 0.5 * std::numbers::pi) theta -= std::numbers::pi;

  const double half_trace = 0.5 * (vyy + vzz);
  const double half_gap = std::hypot(0.5 * (vyy - vzz), vyz);
  double min_var = half_trace - half_gap;
  if (half_trace > 0.0) min_var = (vyy * vzz - vyz * vyz) / (half_trace + half_gap);
  r.theta_min = theta;
  r.xi2_direct = m.n_mean * min_var / (sx * sx);
  return r;
}

}  // namespace bsq

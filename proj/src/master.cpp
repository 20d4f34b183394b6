#include "bsq/master.hpp"

#include <algorithm>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "bsq/trajectories.hpp"

namespace bsq {

DensityMatrix::DensityMatrix(int max_n) : max_n_(max_n) {
  if (max_n < 0) throw ConfigError("density matrix needs max_n >= 0");
  size_t off = 0;
  for (int n = 0; n <= max_n; ++n) {
    offsets_.push_back(off);
    off += static_cast<size_t>(n + 1) * (n + 1);
  }
  offsets_.push_back(off);
  data_.assign(off, cplx{});
}

DensityMatrix DensityMatrix::from_pure(const TwoModeSector& state, int max_n) {
  if (state.n_tot() > max_n) throw ConfigError("state sector exceeds density matrix size");
  DensityMatrix rho(max_n);
  const auto c = state.amps();
  const double inv = 1.0 / state.norm2();
  const int n = state.n_tot();
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) rho.at(n, i, j) = c[i] * std::conj(c[j]) * inv;
  return rho;
}

cplx& DensityMatrix::at(int n, int n_a, int n_a2) {
  return data_[offsets_[n] + static_cast<size_t>(n_a) * (n + 1) + n_a2];
}

const cplx& DensityMatrix::at(int n, int n_a, int n_a2) const {
  return data_[offsets_[n] + static_cast<size_t>(n_a) * (n + 1) + n_a2];
}

cplx DensityMatrix::element(int n_a, int n_b, int n_a2, int n_b2) const {
  const int n = n_a + n_b;
  if (n != n_a2 + n_b2 || n > max_n_ || n_a < 0 || n_b < 0 || n_a2 < 0 || n_b2 < 0) return {};
  return at(n, n_a, n_a2);
}

double DensityMatrix::sector_population(int n) const {
  double p = 0.0;
  for (int i = 0; i <= n; ++i) p += at(n, i, i).real();
  return p;
}

double DensityMatrix::trace() const {
  double tr = 0.0;
  for (int n = 0; n <= max_n_; ++n) tr += sector_population(n);
  return tr;
}

double DensityMatrix::hermiticity_error() const {
  double err = 0.0;
  for (int n = 0; n <= max_n_; ++n)
    for (int i = 0; i <= n; ++i)
      for (int j = i; j <= n; ++j) err = std::max(err, std::abs(at(n, i, j) - std::conj(at(n, j, i))));
  return err;
}

MomentSet moments(const DensityMatrix& rho) {
  double tr = 0.0, n_mean = 0.0, adaga = 0.0, ab = 0.0, sz = 0.0, sz2 = 0.0;
  cplx bdaga{}, pair{}, bbba{};
  for (int n = 0; n <= rho.max_n(); ++n) {
    for (int na = 0; na <= n; ++na) {
      const int nb = n - na;
      const double p = rho.at(n, na, na).real();
      const double d = 0.5 * (na - nb);
      tr += p;
      n_mean += p * n;
      adaga += p * na;
      ab += p * na * nb;
      sz += p * d;
      sz2 += p * d * d;
      if (na >= 1) {
        const cplx w = rho.at(n, na, na - 1) * std::sqrt(double(na) * (nb + 1));
        bdaga += w;
        bbba += w * double(nb);
      }
      if (na >= 2)
        pair += rho.at(n, na, na - 2) * std::sqrt(double(na) * (na - 1) * (nb + 1) * (nb + 2));
    }
  }
  if (!(tr > 0.0)) throw DomainError("moments of a zero-trace density matrix");
  MomentSet m;
  m.n_mean = n_mean / tr;
  m.adaga = adaga / tr;
  m.bdaga = bdaga / tr;
  m.quad_A = 0.5 * (ab - pair.real()) / tr;
  m.quad_B = 2.0 * bbba.imag() / tr;
  m.sz_mean = sz / tr;
  m.var_sz = std::max(0.0, sz2 / tr - m.sz_mean * m.sz_mean);
  return m;
}

namespace {

using State = std::vector<double>;  // interleaved re/im of DensityMatrix::raw()

/// Right-hand side of the block-diagonal master equation. Sector n receives
/// population only from sectors n + m, so each block couples downward.
class LossGenerator {
 public:
  LossGenerator(const ModelParams& params, int max_n) : params_(params), layout_(max_n) {
    for (int n = 0; n <= max_n; ++n) {
      std::vector<double> e(n + 1), lam(n + 1);
      for (int na = 0; na <= n; ++na) {
        const double d = 2.0 * na - n;
        e[na] = 0.25 * params.chi * d * d;
        lam[na] = decay_rate(na, n - na, params);
      }
      energy_.push_back(std::move(e));
      rate_.push_back(std::move(lam));
    }
  }

  void operator()(const State& x, State& dxdt, double /*t*/) const {
    const int max_n = layout_.max_n();
    for (int n = 0; n <= max_n; ++n) {
      const size_t off = layout_.offset(n);
      const auto& e = energy_[n];
      const auto& lam = rate_[n];
      for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
          const size_t k = off + static_cast<size_t>(i) * (n + 1) + j;
          const cplx rho{x[2 * k], x[2 * k + 1]};
          cplx d = cplx(-0.5 * (lam[i] + lam[j]), -(e[i] - e[j])) * rho;
          for (int m = 1; m <= 3; ++m) {
            const double g = params_.gamma[m - 1];
            if (g == 0.0 || n + m > max_n) continue;
            const int up = n + m;
            const size_t uoff = layout_.offset(up);
            // a^m: |i+m, n-i> -> |i, n-i>
            const double fa = std::sqrt(falling_factorial(i + m, m) * falling_factorial(j + m, m));
            const size_t ka = uoff + static_cast<size_t>(i + m) * (up + 1) + (j + m);
            d += g * fa * cplx{x[2 * ka], x[2 * ka + 1]};
            // b^m: |i, n-i+m> -> |i, n-i>
            const double fb =
                std::sqrt(falling_factorial(n - i + m, m) * falling_factorial(n - j + m, m));
            const size_t kb = uoff + static_cast<size_t>(i) * (up + 1) + j;
            d += g * fb * cplx{x[2 * kb], x[2 * kb + 1]};
          }
          dxdt[2 * k] = d.real();
          dxdt[2 * k + 1] = d.imag();
        }
      }
    }
  }

  double max_rate() const {
    double r = 0.0;
    for (const auto& v : rate_)
      for (double x : v) r = std::max(r, x);
    return r;
  }

 private:
  ModelParams params_;
  DensityMatrix layout_;
  std::vector<std::vector<double>> energy_;
  std::vector<std::vector<double>> rate_;
};

State pack(const DensityMatrix& rho) {
  State s(2 * rho.raw().size());
  for (size_t k = 0; k < rho.raw().size(); ++k) {
    s[2 * k] = rho.raw()[k].real();
    s[2 * k + 1] = rho.raw()[k].imag();
  }
  return s;
}

void unpack(const State& s, DensityMatrix& rho) {
  for (size_t k = 0; k < rho.raw().size(); ++k) rho.raw()[k] = {s[2 * k], s[2 * k + 1]};
}

}  // namespace

MasterRun integrate_master(const ModelParams& params, const std::vector<double>& t_grid,
                           const MasterOptions& opts) {
  params.validate();
  if (params.n_init > opts.max_n_cap)
    throw ConfigError("master-equation oracle limited to N <= " + std::to_string(opts.max_n_cap) +
                      " (got " + std::to_string(params.n_init) + ")");
  if (t_grid.empty()) throw ConfigError("t_grid must not be empty");
  for (size_t i = 0; i < t_grid.size(); ++i)
    if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
      throw ConfigError("t_grid must be nonnegative and strictly increasing");

  const int max_n = params.n_init;
  DensityMatrix rho = DensityMatrix::from_pure(phase_state(max_n, 0.0), max_n);
  const LossGenerator rhs(params, max_n);

  // Integration starts at t = 0; grid points before the first output are skipped.
  std::vector<double> times;
  if (t_grid.front() > 0.0) times.push_back(0.0);
  times.insert(times.end(), t_grid.begin(), t_grid.end());

  MasterRun run;
  const bool skip_first = t_grid.front() > 0.0;
  bool first = true;
  const auto observe = [&](const State& x, double t) {
    if (first && skip_first) {
      first = false;
      return;
    }
    first = false;
    unpack(x, rho);
    run.times.push_back(t);
    run.moments.push_back(moments(rho));
    run.states.push_back(rho);
  };

  namespace ode = boost::numeric::odeint;
  State x = pack(rho);
  if (times.size() == 1) {
    observe(x, times.front());
    return run;
  }
  const double max_rate = rhs.max_rate();
  const double max_dt = max_rate > 0.0 ? 0.1 / max_rate : times.back() - times.front();
  auto stepper = ode::make_dense_output(opts.abs_tol, opts.rel_tol, max_dt,
                                        ode::runge_kutta_dopri5<State>());
  const double dt0 = std::min(max_dt, 1e-3 * (times.back() - times.front()));
  ode::integrate_times(stepper, std::cref(rhs), x, times.begin(), times.end(), dt0, observe);
  return run;
}

double var_sz_check(const ModelParams& params, const std::vector<double>& t_grid,
                    const MasterOptions& opts) {
  const auto run = integrate_master(params, t_grid, opts);
  double worst = 0.0;
  for (const auto& m : run.moments) worst = std::max(worst, std::abs(m.var_sz - 0.25 * m.n_mean));
  return worst;
}

}  // namespace bsq

#include "bsq/trajectories.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>

#include "bsq/rng.hpp"

namespace bsq {

void TrajectoryConfig::validate() const {
  std::ostringstream err;
  if (n_traj < 1) err << "n_traj must be >= 1 (got " << n_traj << ")";
  else if (t_grid.empty()) err << "t_grid must not be empty";
  else if (!(t_grid.front() >= 0.0)) err << "t_grid must start at t >= 0 (got " << t_grid.front() << ")";
  else if (!(root_tol > 0.0)) err << "root_tol must be > 0 (got " << root_tol << ")";
  else
    for (size_t i = 1; i < t_grid.size(); ++i)
      if (!(t_grid[i] > t_grid[i - 1])) {
        err << "t_grid must be strictly increasing (t[" << i << "] = " << t_grid[i] << ")";
        break;
      }
  if (!err.str().empty()) throw ConfigError(err.str());
}

double decay_rate(int n_a, int n_b, const ModelParams& params) {
  double rate = 0.0;
  for (int m = 1; m <= 3; ++m) {
    const double g = params.gamma[m - 1];
    if (g == 0.0) continue;
    rate += g * (falling_factorial(n_a, m) + falling_factorial(n_b, m));
  }
  return rate;
}

namespace {

std::vector<double> sector_rates(int n, const ModelParams& params) {
  std::vector<double> rates(static_cast<size_t>(n) + 1);
  for (int na = 0; na <= n; ++na) rates[na] = decay_rate(na, n - na, params);
  return rates;
}

}  // namespace

TwoModeSector propagate(const TwoModeSector& state, double dt, const ModelParams& params) {
  if (!(dt >= 0.0)) throw ConfigError("propagation step must be >= 0");
  const int n = state.n_tot();
  const auto in = state.amps();
  std::vector<cplx> out(in.begin(), in.end());
  if (dt > 0.0) {
    for (int na = 0; na <= n; ++na) {
      const double d = 2.0 * na - n;
      const double phase = -0.25 * params.chi * d * d * dt;
      const double damp = -0.5 * decay_rate(na, n - na, params) * dt;
      out[na] *= std::exp(cplx(damp, phase));
    }
  }
  return TwoModeSector(n, std::move(out), state.t_ref() + dt);
}

std::optional<double> sample_jump_time(const TwoModeSector& state, double r,
                                       const ModelParams& params, double horizon,
                                       double root_tol) {
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("jump draw must lie in (0, 1)");
  const int n = state.n_tot();
  const auto c = state.amps();
  const auto rates = sector_rates(n, params);

  std::vector<double> w, lam;
  double floor_weight = 0.0, total = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double p = std::norm(c[k]);
    total += p;
    if (p == 0.0) continue;
    if (rates[k] == 0.0) floor_weight += p;
    else {
      w.push_back(p);
      lam.push_back(rates[k]);
    }
  }
  if (!(total > 0.0)) throw DomainError("jump time of a zero-norm state");
  const double target = r * total;
  if (w.empty() || floor_weight >= target) return std::nullopt;

  const double lam_min = *std::min_element(lam.begin(), lam.end());
  const double lam_max = *std::max_element(lam.begin(), lam.end());

  // f(tau) = ln(norm^2(tau)) - ln(target), decreasing; returns (f, f').
  const auto eval = [&](double tau) {
    double s = 0.0, ds = 0.0;
    for (size_t k = 0; k < w.size(); ++k) {
      const double e = w[k] * std::exp(-(lam[k] - lam_min) * tau);
      s += e;
      ds -= lam[k] * e;
    }
    double value;
    if (floor_weight > 0.0) {
      const double tail = std::exp(-lam_min * tau);
      value = std::log(floor_weight + s * tail);
      ds = ds * tail / (floor_weight + s * tail);
    } else {
      value = std::log(s) - lam_min * tau;
      ds /= s;
    }
    return std::pair{value - std::log(target), ds};
  };

  double lo = 0.0, hi;
  if (std::isfinite(horizon)) {
    if (eval(horizon).first > 0.0) return std::nullopt;
    hi = horizon;
  } else {
    hi = 1.0 / lam_max;
    while (eval(hi).first > 0.0) hi *= 2.0;
  }

  double tau = std::clamp(-std::log(r) / (0.5 * (lam_min + lam_max)), lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const auto [f, df] = eval(tau);
    if (f > 0.0) lo = tau;
    else hi = tau;
    double next = (df < 0.0) ? tau - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - tau) <= root_tol * next || hi - lo <= root_tol * hi) return next;
    tau = next;
  }
  return tau;
}

std::array<double, kNumChannels> channel_probabilities(const TwoModeSector& state,
                                                       const ModelParams& params) {
  std::array<double, kNumChannels> p{};
  const int n = state.n_tot();
  const auto c = state.amps();
  double total = 0.0;
  for (int na = 0; na <= n; ++na) {
    const double w = std::norm(c[na]);
    for (int m = 1; m <= 3; ++m) {
      const double g = params.gamma[m - 1];
      p[m - 1] += g * w * falling_factorial(na, m);
      p[3 + m - 1] += g * w * falling_factorial(n - na, m);
    }
  }
  for (double v : p) total += v;
  if (!(total > 0.0)) throw DomainError("no loss channel is open for this state");
  for (double& v : p) v /= total;
  return p;
}

TwoModeSector apply_jump(const TwoModeSector& state, Channel channel) {
  const int m = channel.order;
  const int n = state.n_tot();
  if (m < 1 || m > 3) throw ConfigError("loss order must be 1, 2 or 3");
  if (n < m)
    throw DomainError("cannot remove " + std::to_string(m) + " particles from a sector of " +
                      std::to_string(n));
  const auto c = state.amps();
  std::vector<cplx> out(static_cast<size_t>(n - m) + 1);
  if (channel.mode == Mode::a) {
    for (int na = m; na <= n; ++na) out[na - m] = std::sqrt(falling_factorial(na, m)) * c[na];
  } else {
    for (int na = 0; na <= n - m; ++na) out[na] = std::sqrt(falling_factorial(n - na, m)) * c[na];
  }
  return TwoModeSector(n - m, std::move(out), state.t_ref()).normalized();
}

TrajectoryRecord run_trajectory(const ModelParams& params, const TrajectoryConfig& cfg,
                                std::int64_t traj_index) {
  CounterRng rng(cfg.master_seed, static_cast<std::uint64_t>(traj_index));
  TrajectoryRecord rec;
  rec.moments.reserve(cfg.t_grid.size());
  rec.jumps.reserve(cfg.t_grid.size());

  TwoModeSector state = phase_state(params.n_init, 0.0);
  ChannelCounts counts{};
  double t = 0.0;
  for (const double t_obs : cfg.t_grid) {
    while (t < t_obs) {
      const double horizon = t_obs - t;
      const auto tau = state.n_tot() == 0
                           ? std::nullopt
                           : sample_jump_time(state, rng.uniform_open01(), params, horizon,
                                              cfg.root_tol);
      if (!tau) {
        state = propagate(state, horizon, params);
        t = t_obs;
        break;
      }
      state = propagate(state, *tau, params);
      t += *tau;

      const auto probs = channel_probabilities(state, params);
      const double u = rng.uniform_open01();
      int ch = 0;
      double acc = probs[0];
      while (ch + 1 < kNumChannels && (u >= acc || probs[ch] == 0.0)) acc += probs[++ch];
      while (probs[ch] == 0.0) --ch;  // u rounded past the last open channel
      state = apply_jump(state, Channel::from_index(ch));
      ++counts[ch];
    }
    if (state.n_tot() == 0) {
      rec.emptied = true;
      rec.moments.push_back(MomentSet{});
    } else {
      state = state.normalized();
      rec.moments.push_back(moments(state));
    }
    rec.jumps.push_back(counts);
  }
  return rec;
}

namespace {

constexpr int kLinear = 8;
using Linear = std::array<double, kLinear>;

Linear to_linear(const MomentSet& m) {
  return {m.n_mean, m.adaga, m.bdaga.real(), m.bdaga.imag(), m.quad_A, m.quad_B, m.sz_mean,
          m.var_sz + m.sz_mean * m.sz_mean};
}

MomentSet from_linear(const Linear& v) {
  MomentSet m;
  m.n_mean = v[0];
  m.adaga = v[1];
  m.bdaga = {v[2], v[3]};
  m.quad_A = v[4];
  m.quad_B = v[5];
  m.sz_mean = v[6];
  m.var_sz = v[7] - v[6] * v[6];
  return m;
}

std::pair<double, double> xi2_or_nan(const MomentSet& m) {
  try {
    const auto r = xi2_from_moments(m);
    return {r.xi2_direct, r.xi2};
  } catch (const DomainError&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
}

double jackknife_se(const std::vector<double>& loo) {
  const double n = static_cast<double>(loo.size());
  if (loo.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : loo) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  return std::sqrt((n - 1.0) / n * ss);
}

}  // namespace

EnsembleStats run_ensemble(const ModelParams& params, const TrajectoryConfig& cfg,
                           unsigned threads) {
  params.validate();
  cfg.validate();
  const auto n_traj = cfg.n_traj;
  std::vector<TrajectoryRecord> records(static_cast<size_t>(n_traj));

  std::atomic<std::int64_t> next{0};
  const auto worker = [&] {
    for (std::int64_t i = next++; i < n_traj; i = next++)
      records[static_cast<size_t>(i)] = run_trajectory(params, cfg, i);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_traj)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }

  EnsembleStats stats;
  stats.n_traj = n_traj;
  const double n = static_cast<double>(n_traj);
  for (size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
    Linear sum{};
    std::array<double, kNumChannels> jumps{};
    double emptied = 0.0;
    for (const auto& rec : records) {
      const auto v = to_linear(rec.moments[ti]);
      for (int k = 0; k < kLinear; ++k) sum[k] += v[k];
      for (int c = 0; c < kNumChannels; ++c) jumps[c] += static_cast<double>(rec.jumps[ti][c]);
      if (rec.moments[ti].n_mean == 0.0) emptied += 1.0;
    }

    EnsemblePoint pt;
    pt.t = cfg.t_grid[ti];
    Linear mean;
    for (int k = 0; k < kLinear; ++k) mean[k] = sum[k] / n;
    pt.mean = from_linear(mean);
    std::tie(pt.xi2, pt.xi2_reduced) = xi2_or_nan(pt.mean);
    for (int c = 0; c < kNumChannels; ++c) pt.mean_jumps[c] = jumps[c] / n;
    pt.lost_fraction = 1.0 - pt.mean.n_mean / params.n_init;
    pt.emptied_fraction = emptied / n;

    if (n_traj >= 2) {
      std::array<std::vector<double>, kLinear> loo_lin;
      std::vector<double> loo_var(records.size()), loo_xi2(records.size()), loo_red(records.size());
      for (auto& v : loo_lin) v.resize(records.size());
      for (size_t i = 0; i < records.size(); ++i) {
        const auto v = to_linear(records[i].moments[ti]);
        Linear loo;
        for (int k = 0; k < kLinear; ++k) {
          loo[k] = (sum[k] - v[k]) / (n - 1.0);
          loo_lin[k][i] = loo[k];
        }
        const MomentSet m = from_linear(loo);
        loo_var[i] = m.var_sz;
        std::tie(loo_xi2[i], loo_red[i]) = xi2_or_nan(m);
      }
      Linear se;
      for (int k = 0; k < kLinear; ++k) se[k] = jackknife_se(loo_lin[k]);
      pt.stderr_.n_mean = se[0];
      pt.stderr_.adaga = se[1];
      pt.stderr_.bdaga = {se[2], se[3]};
      pt.stderr_.quad_A = se[4];
      pt.stderr_.quad_B = se[5];
      pt.stderr_.sz_mean = se[6];
      pt.stderr_.var_sz = jackknife_se(loo_var);
      pt.xi2_stderr = jackknife_se(loo_xi2);
      pt.xi2_reduced_stderr = jackknife_se(loo_red);
    }
    stats.points.push_back(pt);
  }
  return stats;
}

}  // namespace bsq

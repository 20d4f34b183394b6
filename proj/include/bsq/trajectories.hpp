#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "bsq/fock.hpp"

namespace bsq {

enum class Mode { a = 0, b = 1 };

/// A loss channel: m particles removed from one mode by J = sqrt(gamma_m) c^m.
struct Channel {
  Mode mode = Mode::a;
  int order = 1;

  /// Flat index in [0, 6): mode-major, then order.
  int index() const { return static_cast<int>(mode) * 3 + (order - 1); }
  static Channel from_index(int i) { return {i < 3 ? Mode::a : Mode::b, i % 3 + 1}; }
};

inline constexpr int kNumChannels = 6;
using ChannelCounts = std::array<std::int64_t, kNumChannels>;

struct TrajectoryConfig {
  std::uint64_t master_seed = 0;
  std::int64_t n_traj = 1;
  std::vector<double> t_grid;
  double root_tol = 1e-10;

  void validate() const;
};

/// Total norm-decay rate of |n_a, n_b>:
/// sum_m gamma_m [n_a!/(n_a-m)! + n_b!/(n_b-m)!].
double decay_rate(int n_a, int n_b, const ModelParams& params);

/// Exact propagation by dt under H0 - i hbar Lambda / 2 (both diagonal).
TwoModeSector propagate(const TwoModeSector& state, double dt, const ModelParams& params);

/// Waiting time until the next quantum jump: the tau solving
/// sum_k |c_k|^2 exp(-Lambda_k tau) = r * ||state||^2.
/// Returns nullopt when no jump happens before `horizon`, either because the
/// norm at the horizon is still above the threshold or because the
/// non-decaying part of the state already carries enough weight.
std::optional<double> sample_jump_time(const TwoModeSector& state, double r,
                                       const ModelParams& params,
                                       double horizon = std::numeric_limits<double>::infinity(),
                                       double root_tol = 1e-10);

/// Probabilities of the six channels, proportional to gamma_m <c^{+m} c^m>.
std::array<double, kNumChannels> channel_probabilities(const TwoModeSector& state,
                                                       const ModelParams& params);

/// Applies c^m of the chosen mode and renormalizes. The result lives in the
/// sector n_tot - m and keeps the time stamp of the input.
TwoModeSector apply_jump(const TwoModeSector& state, Channel channel);

struct TrajectoryRecord {
  std::vector<MomentSet> moments;      // one per t_grid point
  std::vector<ChannelCounts> jumps;    // cumulative jump counts per t_grid point
  bool emptied = false;                // all particles lost at some point
};

/// One Monte Carlo wavefunction trajectory started from the phi = 0 phase
/// state. Fully determined by (cfg.master_seed, traj_index).
TrajectoryRecord run_trajectory(const ModelParams& params, const TrajectoryConfig& cfg,
                                std::int64_t traj_index);

struct EnsemblePoint {
  double t = 0.0;
  MomentSet mean;
  MomentSet stderr_;          // jackknife standard error of each moment
  double xi2 = 0.0;           // covariance route on the averaged moments; NaN if undefined
  double xi2_stderr = 0.0;
  double xi2_reduced = 0.0;   // reduced form, which assumes var_sz = <N>/4
  double xi2_reduced_stderr = 0.0;
  std::array<double, kNumChannels> mean_jumps{};
  double lost_fraction = 0.0;
  double emptied_fraction = 0.0;
};

struct EnsembleStats {
  std::int64_t n_traj = 0;
  std::vector<EnsemblePoint> points;
};

/// Averages n_traj trajectories. Moments are averaged first and the
/// squeezing parameter formed from the averages. With two- and three-body
/// losses var_sz drifts away from <N>/4, so `xi2` minimizes the full
/// (S_y, S_z) covariance instead of using the reduced form. The result is bitwise
/// independent of `threads`.
EnsembleStats run_ensemble(const ModelParams& params, const TrajectoryConfig& cfg,
                           unsigned threads = 1);

}  // namespace bsq

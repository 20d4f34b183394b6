#pragma once

#include <vector>

#include "bsq/fock.hpp"

namespace bsq {

/// Density matrix over {|n_a, n_b> : n_a + n_b <= max_n}.
///
/// Loss dynamics started from a fixed-N state never create coherences
/// between different total-number sectors, so only the diagonal blocks are
/// stored; element() returns zero for any cross-sector entry.
class DensityMatrix {
 public:
  explicit DensityMatrix(int max_n);

  static DensityMatrix from_pure(const TwoModeSector& state, int max_n);

  int max_n() const { return max_n_; }
  /// Dimension of the full basis, (max_n + 1)(max_n + 2) / 2.
  int dimension() const { return (max_n_ + 1) * (max_n_ + 2) / 2; }

  /// Entry <n_a, n - n_a| rho |n_a', n - n_a'> of sector n.
  cplx& at(int n, int n_a, int n_a2);
  const cplx& at(int n, int n_a, int n_a2) const;
  cplx element(int n_a, int n_b, int n_a2, int n_b2) const;

  double trace() const;
  double sector_population(int n) const;
  /// max |rho_ij - conj(rho_ji)|
  double hermiticity_error() const;

  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }
  size_t offset(int n) const { return offsets_[static_cast<size_t>(n)]; }

 private:
  int max_n_;
  std::vector<size_t> offsets_;
  std::vector<cplx> data_;
};

/// Tr(rho O) for the squeezing moments (normalized by the trace).
MomentSet moments(const DensityMatrix& rho);

struct MasterOptions {
  int max_n_cap = 30;
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
};

struct MasterRun {
  std::vector<double> times;
  std::vector<MomentSet> moments;
  std::vector<DensityMatrix> states;
};

/// Integrates the m-body loss master equation in the Schroedinger picture,
/// d rho/dt = -i[H0, rho] + sum_{m, eps} gamma_m (c^m rho c^{+m} - {c^{+m} c^m, rho}/2),
/// from the phi = 0 phase state with adaptive Dormand-Prince steps.
MasterRun integrate_master(const ModelParams& params, const std::vector<double>& t_grid,
                           const MasterOptions& opts = {});

/// Worst deviation max_t |Var S_z - <N>/4| along the master-equation solution.
double var_sz_check(const ModelParams& params, const std::vector<double>& t_grid,
                    const MasterOptions& opts = {});

}  // namespace bsq

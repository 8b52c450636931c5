#pragma once

#include <cstdint>
#include <vector>

#include "dospde/grid_solver.hpp"
#include "dospde/model.hpp"

namespace dospde {

/// Backward-induction solution on the recombining random-walk lattice:
/// nodes i h for |i| <= Nt with h = sqrt(dt). y holds the value process, z its
/// symmetric-difference derivative estimate, kp/km the per-node increments of
/// the two reflection processes.
class LatticeSolution {
 public:
  LatticeSolution() = default;
  LatticeSolution(int nt, int jmax, double dt);

  int nt() const { return nt_; }
  int jmax() const { return jmax_; }
  int width() const { return 2 * jmax_ + 1; }
  double dt() const { return dt_; }
  double h() const { return h_; }

  /// Node index i runs over 0..2*jmax, centered so node(jmax) = 0.
  double node(int i) const { return (i - jmax_) * h_; }

  double& y(int k, int i) { return y_[idx(k, i)]; }
  double y(int k, int i) const { return y_[idx(k, i)]; }
  double& z(int k, int i) { return z_[idx(k, i)]; }
  double z(int k, int i) const { return z_[idx(k, i)]; }
  double& kp(int k, int i) { return kp_[idx(k, i)]; }
  double kp(int k, int i) const { return kp_[idx(k, i)]; }
  double& km(int k, int i) { return km_[idx(k, i)]; }
  double km(int k, int i) const { return km_[idx(k, i)]; }

  /// Piecewise-linear interpolation of a per-step increment field at an
  /// off-lattice position; zero outside the lattice extent.
  double interp_kp(int k, double x) const { return interp(kp_, k, x); }
  double interp_km(int k, double x) const { return interp(km_, k, x); }

 private:
  std::size_t idx(int k, int i) const {
    return static_cast<std::size_t>(k) * (2 * jmax_ + 1) + i;
  }
  double interp(const std::vector<double>& field, int k, double x) const;

  int nt_ = 0;
  int jmax_ = 0;
  double dt_ = 0.0;
  double h_ = 0.0;
  std::vector<double> y_, z_;   // (nt+1) x width
  std::vector<double> kp_, km_; // nt x width
};

/// Solves the reflected backward equation on the lattice for one noise path:
/// conditional expectation (half up + half down), then f dt + div g dt +
/// h . dB_k with coefficients evaluated at the later slice (y and z1 taken
/// from the later lattice slice when referenced), then the same reflection or
/// implicit penalty as the grid solver. Requires Nt sqrt(dt) > R so the
/// lattice covers the truncated domain.
LatticeSolution lattice_solve(const ProblemSpec& spec, const Discretization& disc,
                              const NoisePath& noise, SolveMode mode);

struct FeynmanKacResidual {
  double sup_err_y = 0.0;
  double sup_err_z = 0.0;
};

/// Sup distance between the lattice (y, z) and the grid (u, grad u), linearly
/// interpolated in x, over all times and lattice nodes inside [-R+dx, R-dx].
FeynmanKacResidual feynman_kac_residual(const GridSolution& grid, const LatticeSolution& lat,
                                        const Discretization& disc);

enum class MeasureSide { Plus, Minus };

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo evaluation of the measure applied to a test function phi(t, x):
/// M random-walk paths started uniformly on D = [-R, R], each accumulating
/// sum_k phi(t_k, W_k) dK at the visited positions (dK interpolated from the
/// lattice increments), scaled by |D|. Paths use sub-seed seed XOR path-index,
/// so the result is independent of scheduling.
McEstimate measure_mc(const LatticeSolution& lat, const Expr& phi, MeasureSide side, int paths,
                      std::uint64_t seed, const Discretization& disc);

struct EnergyCheckResult {
  std::vector<double> checkpoints;  // times
  std::vector<double> lhs;          // ||u_t||^2 + int_t^T ||grad u_s||^2 ds
  std::vector<double> rhs;          // MC estimate of E^m (A_T - A_t)^2
  std::vector<double> rhs_stderr;
  double max_rel_err = 0.0;
};

/// Cross-checks the energy identity of the pure lower-obstacle potential:
/// requires f = g = h = 0 and an upper obstacle that never binds; u and its
/// reflection increments come from the grid solver in projected mode, the
/// right side from M walk paths accumulating the pointwise K+ increments.
/// Five evenly spaced checkpoints. Throws IllPosed when the problem has noise
/// or the upper obstacle is active.
EnergyCheckResult energy_identity_check(const ProblemSpec& spec, const Discretization& disc,
                                        int paths, std::uint64_t seed);

}  // namespace dospde

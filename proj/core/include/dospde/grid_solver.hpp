#pragma once

#include <span>
#include <string>
#include <vector>

#include "dospde/model.hpp"

namespace dospde {

/// How reflecting barriers are handled by the penalized scheme:
/// UpperOnly reflects the lower barrier exactly and penalizes the upper one
/// (the route the penalization analysis takes); Both penalizes both barriers.
enum class PenaltyKind { UpperOnly, Both };

struct SolveMode {
  enum class Kind { Free, Projected, Penalized };
  Kind kind = Kind::Projected;
  double penalty_level = 0.0;
  PenaltyKind penalty = PenaltyKind::UpperOnly;

  static SolveMode free() { return {Kind::Free, 0.0, PenaltyKind::UpperOnly}; }
  static SolveMode projected() { return {Kind::Projected, 0.0, PenaltyKind::UpperOnly}; }
  static SolveMode penalized(double n, PenaltyKind p = PenaltyKind::UpperOnly) {
    return {Kind::Penalized, n, p};
  }
};

struct GridDiagnostics {
  double max_upper_excess = 0.0;  // max over the grid of (u - U)^+
  double max_lower_excess = 0.0;  // max over the grid of (L - u)^+
  std::vector<double> l2_u_sq;    // per-slice sum u^2 dx, size Nt+1
  std::vector<double> l2_grad_sq; // per-slice sum (grad u)^2 dx
  std::vector<std::string> warnings;
};

struct GridSolution {
  FieldSeries u;
  DiscreteMeasure nu_plus;   // cell mass = pointwise K+ increment * dx
  DiscreteMeasure nu_minus;
  GridDiagnostics diagnostics;
};

/// One theta-implicit step of du/dt = (1/2) Lap u with zero-flux ends:
/// solves (I - theta (dt/2) Lap_h) out = (I + (1-theta) (dt/2) Lap_h) u_next
/// by a tridiagonal sweep. Constants pass through exactly.
void heat_step(std::span<const double> u_next, double dt, double dx, double theta,
               std::span<double> out);
std::vector<double> heat_step(std::span<const double> u_next, double dt, double dx, double theta);

/// Adds the frozen sources: u += f dt + div_h(g) dt + sum_i h_i dB_k[i].
/// div_h is the central difference of the evaluated g slice (one-sided ends).
void source_step(std::span<double> u, double dt, std::span<const double> f_slice,
                 std::span<const double> g_slice, double dx,
                 std::span<const std::vector<double>> h_slices, std::span<const double> db_k);

/// Exact two-sided reflection: u' = clamp(u, L, U), dkp = (L - u)^+,
/// dkm = (u - U)^+. Complementarity holds bitwise: wherever dkp > 0 the output
/// equals L, and at most one of dkp, dkm is nonzero per node.
/// Throws ObstacleCrossing if L > U at some node.
void project_step(std::span<double> u, std::span<const double> lower, std::span<const double> upper,
                  std::span<double> dkp, std::span<double> dkm);

/// Implicit nodewise penalty update. For the upper barrier the new value
/// solves u' = u - n dt (u' - U)^+ (closed form per node), which is
/// unconditionally stable in n dt; dkm is the drift actually removed
/// (dkm = u - u' = n dt (u' - U)^+). UpperOnly then reflects the lower
/// barrier exactly; Both applies the mirrored implicit penalty instead.
/// n = 0 is the identity (no increments; UpperOnly still reflects below).
void penalty_step(std::span<double> u, std::span<const double> lower, std::span<const double> upper,
                  double n, double dt, PenaltyKind kind, std::span<double> dkp,
                  std::span<double> dkm);

/// Pathwise backward solve of the linear (frozen-coefficient) two-obstacle
/// equation on D = [-R, R] for one noise path.
///
/// The loop runs k = Nt-1 .. 0. Coefficients are evaluated at the later time
/// slice t_{k+1}, with y and z1 taken from `frozen` (required whenever f, g or
/// h references them); each step applies the heat step, then the sources, then
/// the reflection or penalty against the obstacles at t_k. The terminal slice
/// is psi exactly.
GridSolution solve(const ProblemSpec& spec, const Discretization& disc, const NoisePath& noise,
                   const FieldSeries* frozen, SolveMode mode);

}  // namespace dospde

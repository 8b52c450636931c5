#pragma once

#include <vector>

#include "dospde/grid_solver.hpp"
#include "dospde/model.hpp"

namespace dospde {

/// Constants of the weighted-norm contraction argument. eps is picked by
/// bisection (then halved and capped at 1), mu makes the two sides of the
/// fixed-point estimate balance, delta weighs the Y-part of the norm and
/// delta0 is the contraction factor of one iteration.
struct ContractionConstants {
  double eps = 0.0;
  double mu = 0.0;
  double delta = 0.0;
  double delta0 = 0.0;
};

/// Derives (eps, mu, delta, delta0) from the declared Lipschitz data.
///
/// eps = min(1, half of the largest eps satisfying
///   C eps + alpha + beta^2 (1 + eps) < 1 - alpha - C eps,
/// located by bisection to 1e-12). mu solves
///   (mu - 1/eps) / (1 - alpha - C eps)
///     = C (C+1) (1 + 1/eps) / (C eps + alpha + beta^2 (1 + eps));
/// for C = 0 the right side vanishes, we take mu = 1/eps and floor delta at
/// 1e-6 to keep the norm definite. Throws NotContractive when
/// alpha + beta^2/2 < 1/2 fails.
ContractionConstants contraction_constants(const LipschitzData& lip);

/// Discrete weighted norm of a field increment:
///   sum_k e^{mu t_k} (delta ||du_k||^2 + ||grad du_k||^2) dt,  k = 0..Nt-1,
/// with ||.||^2 = sum_j (.)^2 dx.
double weighted_norm_sq(const FieldSeries& du, const ContractionConstants& consts,
                        const Discretization& disc, double T);

struct PicardIterate {
  int iter = 0;
  double norm_sq = 0.0;
  double ratio = 0.0;  // norm_sq / previous norm_sq; NaN for the first iterate
};

using PicardTrace = std::vector<PicardIterate>;

enum class PicardStart { ZeroField, FreeSolution };

struct PicardResult {
  GridSolution solution;
  PicardTrace trace;
  ContractionConstants constants;
  int iterations = 0;
  bool converged = false;
  double last_norm_sq = 0.0;

  /// Throws NoConvergence when the tolerance was not met.
  void require_converged() const;
};

/// Fixed-point iteration for nonlinear coefficients: each iterate freezes
/// (y, z1) at the previous iterate's fields and solves the resulting linear
/// two-obstacle problem in projected mode on the same noise path. Iterate 0 is
/// the zero field (or the free linear solution when so requested). Stops when
/// the weighted norm_sq of the increment drops below tol^2.
PicardResult picard_solve(const ProblemSpec& spec, const Discretization& disc,
                          const NoisePath& noise, double tol, int max_iter,
                          PicardStart start = PicardStart::ZeroField);

}  // namespace dospde

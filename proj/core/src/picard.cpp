#include "dospde/picard.hpp"

#include <cmath>
#include <limits>

#include "dospde/errors.hpp"

namespace dospde {

namespace {

bool eps_admissible(const LipschitzData& lip, double eps) {
  const double lhs = lip.C * eps + lip.alpha + lip.beta * lip.beta * (1.0 + eps);
  const double rhs = 1.0 - lip.alpha - lip.C * eps;
  return lhs < rhs;
}

}  // namespace

ContractionConstants contraction_constants(const LipschitzData& lip) {
  if (!validate_contraction(lip))
    throw NotContractive("alpha + beta^2/2 = " +
                         std::to_string(lip.alpha + 0.5 * lip.beta * lip.beta) +
                         " is not < 1/2");

  ContractionConstants c;

  // Admissibility is monotone in eps, and eps >= 2 already means the capped
  // value is 1, so it is enough to bisect on [0, 2].
  if (eps_admissible(lip, 2.0)) {
    c.eps = 1.0;
  } else {
    double lo = 0.0, hi = 2.0;
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      (eps_admissible(lip, mid) ? lo : hi) = mid;
    }
    c.eps = std::min(1.0, 0.5 * lo);
  }

  const double denom_z = 1.0 - lip.alpha - lip.C * c.eps;
  const double denom_y = lip.C * c.eps + lip.alpha + lip.beta * lip.beta * (1.0 + c.eps);
  if (lip.C > 0.0) {
    c.mu = 1.0 / c.eps + denom_z * lip.C * (lip.C + 1.0) * (1.0 + 1.0 / c.eps) / denom_y;
  } else {
    c.mu = 1.0 / c.eps;
  }
  c.delta = std::max((c.mu - 1.0 / c.eps) / denom_z, 1e-6);
  c.delta0 = denom_y / denom_z;
  return c;
}

double weighted_norm_sq(const FieldSeries& du, const ContractionConstants& consts,
                        const Discretization& disc, double T) {
  const double dt = disc.dt(T);
  const double dx = disc.dx();
  double total = 0.0;
  for (int k = 0; k < disc.nt; ++k) {
    auto v = du.slice(k);
    auto g = du.grad_slice(k);
    double sy = 0.0, sz = 0.0;
    for (int j = 0; j < disc.nx; ++j) {
      sy += v[j] * v[j];
      sz += g[j] * g[j];
    }
    total += std::exp(consts.mu * (k * dt)) * (consts.delta * sy * dx + sz * dx) * dt;
  }
  return total;
}

void PicardResult::require_converged() const {
  if (!converged) throw NoConvergence(iterations, last_norm_sq);
}

PicardResult picard_solve(const ProblemSpec& spec, const Discretization& disc,
                          const NoisePath& noise, double tol, int max_iter, PicardStart start) {
  spec.validate();
  disc.validate();
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");

  PicardResult result;
  result.constants = contraction_constants(spec.lip);

  FieldSeries prev(disc.nt, disc.nx);  // iterate 0: the zero field
  if (start == PicardStart::FreeSolution) {
    FieldSeries zero(disc.nt, disc.nx);
    prev = solve(spec, disc, noise, &zero, SolveMode::free()).u;
  }

  double prev_norm_sq = std::numeric_limits<double>::quiet_NaN();
  for (int m = 1; m <= max_iter; ++m) {
    GridSolution cur = solve(spec, disc, noise, &prev, SolveMode::projected());
    const FieldSeries du = FieldSeries::difference(cur.u, prev);
    const double ns = weighted_norm_sq(du, result.constants, disc, spec.T);

    PicardIterate it;
    it.iter = m;
    it.norm_sq = ns;
    it.ratio = (m >= 2) ? ns / prev_norm_sq : std::numeric_limits<double>::quiet_NaN();
    result.trace.push_back(it);

    result.solution = std::move(cur);
    prev = result.solution.u;  // the next iterate freezes these fields
    result.iterations = m;
    result.last_norm_sq = ns;
    prev_norm_sq = ns;

    if (ns < tol * tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace dospde

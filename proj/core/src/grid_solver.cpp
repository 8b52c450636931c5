#include "dospde/grid_solver.hpp"

#include <algorithm>
#include <cmath>

#include "dospde/errors.hpp"

namespace dospde {

namespace {

/// Tridiagonal solve for (I - r Lap_h) x = rhs where Lap_h is the 3-point
/// Laplacian (1/dx^2 scaling already in r) with mirror (zero-flux) ends.
/// The matrix is an M-matrix for r >= 0; with fixed coefficients the
/// floating-point sweep is a composition of monotone operations, so the
/// solution is exactly monotone in rhs (the comparison assertions rely on it).
void solve_heat_system(double a, std::span<const double> rhs, std::span<double> x,
                       std::vector<double>& cprime, std::vector<double>& dprime) {
  const std::size_t n = rhs.size();
  cprime.resize(n);
  dprime.resize(n);
  // Row 0: (1 + a) x0 - a x1 = rhs0.
  double diag0 = 1.0 + a;
  cprime[0] = -a / diag0;
  dprime[0] = rhs[0] / diag0;
  for (std::size_t j = 1; j < n; ++j) {
    const double diag = (j + 1 == n) ? 1.0 + a : 1.0 + 2.0 * a;
    const double denom = diag + a * cprime[j - 1];
    cprime[j] = -a / denom;
    dprime[j] = (rhs[j] + a * dprime[j - 1]) / denom;
  }
  x[n - 1] = dprime[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) x[j] = dprime[j] - cprime[j] * x[j + 1];
}

void apply_laplacian_rhs(std::span<const double> u, double b, std::span<double> rhs) {
  const std::size_t n = u.size();
  rhs[0] = u[0] + b * (u[1] - u[0]);
  for (std::size_t j = 1; j + 1 < n; ++j) rhs[j] = u[j] + b * (u[j + 1] - 2.0 * u[j] + u[j - 1]);
  rhs[n - 1] = u[n - 1] + b * (u[n - 2] - u[n - 1]);
}

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

void heat_step(std::span<const double> u_next, double dt, double dx, double theta,
               std::span<double> out) {
  const double a = theta * 0.5 * dt / (dx * dx);
  const double b = (1.0 - theta) * 0.5 * dt / (dx * dx);
  std::vector<double> rhs(u_next.size());
  apply_laplacian_rhs(u_next, b, rhs);
  if (a == 0.0) {
    std::copy(rhs.begin(), rhs.end(), out.begin());
    return;
  }
  std::vector<double> cprime, dprime;
  solve_heat_system(a, rhs, out, cprime, dprime);
}

std::vector<double> heat_step(std::span<const double> u_next, double dt, double dx, double theta) {
  std::vector<double> out(u_next.size());
  heat_step(u_next, dt, dx, theta, out);
  return out;
}

void source_step(std::span<double> u, double dt, std::span<const double> f_slice,
                 std::span<const double> g_slice, double dx,
                 std::span<const std::vector<double>> h_slices, std::span<const double> db_k) {
  const std::size_t n = u.size();
  std::vector<double> div_g(n);
  central_gradient(g_slice, dx, div_g);
  for (std::size_t j = 0; j < n; ++j) u[j] += f_slice[j] * dt + div_g[j] * dt;
  for (std::size_t i = 0; i < h_slices.size(); ++i) {
    const double db = db_k[i];
    const std::vector<double>& hs = h_slices[i];
    for (std::size_t j = 0; j < n; ++j) u[j] += hs[j] * db;
  }
}

void project_step(std::span<double> u, std::span<const double> lower, std::span<const double> upper,
                  std::span<double> dkp, std::span<double> dkm) {
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (lower[j] > upper[j])
      throw ObstacleCrossing("L > U at node " + std::to_string(j) + " (L = " +
                             std::to_string(lower[j]) + ", U = " + std::to_string(upper[j]) + ")");
    dkp[j] = 0.0;
    dkm[j] = 0.0;
    if (u[j] < lower[j]) {
      dkp[j] = lower[j] - u[j];
      u[j] = lower[j];
    } else if (u[j] > upper[j]) {
      dkm[j] = u[j] - upper[j];
      u[j] = upper[j];
    }
  }
}

void penalty_step(std::span<double> u, std::span<const double> lower, std::span<const double> upper,
                  double n, double dt, PenaltyKind kind, std::span<double> dkp,
                  std::span<double> dkm) {
  const double ndt = n * dt;
  for (std::size_t j = 0; j < u.size(); ++j) {
    dkp[j] = 0.0;
    dkm[j] = 0.0;
    const double a = u[j];
    if (kind == PenaltyKind::Both) {
      if (ndt > 0.0 && a > upper[j]) {
        const double unew = upper[j] + (a - upper[j]) / (1.0 + ndt);
        dkm[j] = a - unew;
        u[j] = unew;
      } else if (ndt > 0.0 && a < lower[j]) {
        const double unew = lower[j] + (a - lower[j]) / (1.0 + ndt);
        dkp[j] = unew - a;
        u[j] = unew;
      }
    } else {
      double v = a;
      if (ndt > 0.0 && v > upper[j]) {
        const double unew = upper[j] + (v - upper[j]) / (1.0 + ndt);
        dkm[j] = v - unew;
        v = unew;
      }
      // Lower barrier stays exactly reflected.
      if (v < lower[j]) {
        dkp[j] = lower[j] - v;
        v = lower[j];
      }
      u[j] = v;
    }
  }
}

GridSolution solve(const ProblemSpec& spec, const Discretization& disc, const NoisePath& noise,
                   const FieldSeries* frozen, SolveMode mode) {
  spec.validate();
  disc.validate();

  const double dt = disc.dt(spec.T);
  const double dx = disc.dx();
  const int nt = disc.nt;
  const int nx = disc.nx;

  if (noise.nt != nt || noise.d1 != spec.d1)
    throw ConfigError("noise path shape does not match (Nt, d1)");
  if (noise.dt != dt) throw ConfigError("noise path dt does not match T/Nt");
  if (spec.coefficients_nonlinear() && frozen == nullptr)
    throw ConfigError("coefficients reference y or z1; a frozen field is required");
  if (frozen && (frozen->nt() != nt || frozen->nx() != nx))
    throw ConfigError("frozen field shape does not match the discretization");

  // Obstacle admissibility is a precondition except in free mode. The
  // contraction hypothesis concerns the fixed point, not one linear solve.
  if (mode.kind != SolveMode::Kind::Free) {
    for (const auto& v : check_hypotheses(spec, disc).violations) {
      if (v.hypothesis == "obstacle-order")
        throw ObstacleCrossing("L > U at t = " + std::to_string(v.t) + ", x = " + std::to_string(v.x));
      if (v.hypothesis == "terminal-sandwich")
        throw PreconditionUnmet("terminal condition escapes the obstacles at x = " +
                                std::to_string(v.x) + " by " + std::to_string(v.magnitude));
    }
  }

  GridSolution sol;
  sol.u = FieldSeries(nt, nx);
  sol.nu_plus = DiscreteMeasure(nt, nx);
  sol.nu_minus = DiscreteMeasure(nt, nx);
  sol.diagnostics.l2_u_sq.assign(nt + 1, 0.0);
  sol.diagnostics.l2_grad_sq.assign(nt + 1, 0.0);

  if (mode.kind == SolveMode::Kind::Penalized && mode.penalty_level < 0.0)
    throw ConfigError("penalty level must be nonnegative");
  if (disc.theta == 0.0 && dt / (dx * dx) > 1.0)
    sol.diagnostics.warnings.push_back("explicit heat step outside the stability bound dt <= dx^2");

  const std::vector<double> xs = disc.nodes();

  std::vector<double> f_s(nx), g_s(nx), lo_s(nx), up_s(nx);
  std::vector<std::vector<double>> h_s(spec.d1, std::vector<double>(nx));
  std::vector<double> dkp(nx), dkm(nx), cprime, dprime, rhs(nx);
  std::vector<double> db(spec.d1);

  const double a_coef = disc.theta * 0.5 * dt / (dx * dx);
  const double b_coef = (1.0 - disc.theta) * 0.5 * dt / (dx * dx);

  double worst_boundary_gap = 0.0;
  double global_sup = 0.0;

  auto record_slice_diagnostics = [&](int k) {
    auto u = sol.u.slice(k);
    auto gu = sol.u.grad_slice(k);
    double su = 0.0, sg = 0.0;
    for (int j = 0; j < nx; ++j) {
      su += u[j] * u[j];
      sg += gu[j] * gu[j];
      global_sup = std::max(global_sup, std::fabs(u[j]));
    }
    sol.diagnostics.l2_u_sq[k] = su * dx;
    sol.diagnostics.l2_grad_sq[k] = sg * dx;
    worst_boundary_gap = std::max(
        worst_boundary_gap, std::max(std::fabs(u[0] - u[1]), std::fabs(u[nx - 1] - u[nx - 2])));
  };

  // Terminal slice: psi exactly.
  spec.psi.eval_slice(spec.T, xs, {}, {}, sol.u.slice(nt));
  sol.u.refresh_gradient(nt, dx);
  record_slice_diagnostics(nt);

  for (int k = nt - 1; k >= 0; --k) {
    const double t_next = (k + 1) * dt;
    const double t_here = k * dt;

    std::span<const double> ys{}, zs{};
    if (frozen) {
      ys = frozen->slice(k + 1);
      zs = frozen->grad_slice(k + 1);
    }
    try {
      spec.f.eval_slice(t_next, xs, ys, zs, f_s);
      spec.g.eval_slice(t_next, xs, ys, zs, g_s);
      for (int i = 0; i < spec.d1; ++i) spec.h[i].eval_slice(t_next, xs, ys, zs, h_s[i]);
      spec.lower.eval_slice(t_here, xs, {}, {}, lo_s);
      spec.upper.eval_slice(t_here, xs, {}, {}, up_s);
    } catch (const EvalError& e) {
      throw EvalError(std::string(e.what()) + " at step " + std::to_string(k));
    }

    auto u_here = sol.u.slice(k);
    apply_laplacian_rhs(sol.u.slice(k + 1), b_coef, rhs);
    if (a_coef == 0.0) {
      std::copy(rhs.begin(), rhs.end(), u_here.begin());
    } else {
      solve_heat_system(a_coef, rhs, u_here, cprime, dprime);
    }

    for (int i = 0; i < spec.d1; ++i) db[i] = noise.at(k, i);
    source_step(u_here, dt, f_s, g_s, dx, h_s, db);

    switch (mode.kind) {
      case SolveMode::Kind::Free:
        std::fill(dkp.begin(), dkp.end(), 0.0);
        std::fill(dkm.begin(), dkm.end(), 0.0);
        break;
      case SolveMode::Kind::Projected:
        project_step(u_here, lo_s, up_s, dkp, dkm);
        break;
      case SolveMode::Kind::Penalized:
        penalty_step(u_here, lo_s, up_s, mode.penalty_level, dt, mode.penalty, dkp, dkm);
        break;
    }

    for (int j = 0; j < nx; ++j) {
      sol.nu_plus.at(k, j) = dkp[j] * dx;
      sol.nu_minus.at(k, j) = dkm[j] * dx;
      sol.diagnostics.max_upper_excess =
          std::max(sol.diagnostics.max_upper_excess, positive_part(u_here[j] - up_s[j]));
      sol.diagnostics.max_lower_excess =
          std::max(sol.diagnostics.max_lower_excess, positive_part(lo_s[j] - u_here[j]));
    }

    sol.u.refresh_gradient(k, dx);
    record_slice_diagnostics(k);
  }

  if (worst_boundary_gap > 1e-6 * global_sup)
    sol.diagnostics.warnings.push_back(
        "solution varies near the domain ends (max gap " + std::to_string(worst_boundary_gap) +
        "); keep obstacle activity and data variation well inside [-R, R]");

  return sol;
}

}  // namespace dospde

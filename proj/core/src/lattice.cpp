#include "dospde/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "dospde/errors.hpp"
#include "dospde/parallel.hpp"

namespace dospde {

namespace {

/// Linear interpolation of per-node values vals[0..n-1] living at positions
/// x0 + i*h; zero outside.
double interp_uniform(const double* vals, int n, double x0, double h, double x) {
  const double p = (x - x0) / h;
  if (p < 0.0 || p > n - 1) return 0.0;
  int i0 = static_cast<int>(p);
  if (i0 > n - 2) i0 = n - 2;
  const double w = p - i0;
  return (1.0 - w) * vals[i0] + w * vals[i0 + 1];
}

}  // namespace

LatticeSolution::LatticeSolution(int nt, int jmax, double dt)
    : nt_(nt),
      jmax_(jmax),
      dt_(dt),
      h_(std::sqrt(dt)),
      y_(static_cast<std::size_t>(nt + 1) * (2 * jmax + 1), 0.0),
      z_(static_cast<std::size_t>(nt + 1) * (2 * jmax + 1), 0.0),
      kp_(static_cast<std::size_t>(nt) * (2 * jmax + 1), 0.0),
      km_(static_cast<std::size_t>(nt) * (2 * jmax + 1), 0.0) {}

double LatticeSolution::interp(const std::vector<double>& field, int k, double x) const {
  return interp_uniform(field.data() + idx(k, 0), width(), -jmax_ * h_, h_, x);
}

LatticeSolution lattice_solve(const ProblemSpec& spec, const Discretization& disc,
                              const NoisePath& noise, SolveMode mode) {
  spec.validate();
  disc.validate();
  const double dt = disc.dt(spec.T);
  const double h = std::sqrt(dt);
  const int nt = disc.nt;
  const int jmax = nt;
  const int width = 2 * jmax + 1;

  if (noise.nt != nt || noise.d1 != spec.d1)
    throw ConfigError("noise path shape does not match (Nt, d1)");
  if (noise.dt != dt) throw ConfigError("noise path dt does not match T/Nt");
  if (!(jmax * h > disc.R))
    throw PreconditionUnmet("lattice extent Nt*sqrt(dt) = " + std::to_string(jmax * h) +
                            " does not cover R = " + std::to_string(disc.R) +
                            "; increase Nt");

  LatticeSolution lat(nt, jmax, dt);

  std::vector<double> xs(width);
  for (int i = 0; i < width; ++i) xs[i] = lat.node(i);

  std::vector<double> f_s(width), g_s(width), div_g(width), lo_s(width), up_s(width);
  std::vector<std::vector<double>> h_s(spec.d1, std::vector<double>(width));
  std::vector<double> ys(width), zs(width), dkp(width), dkm(width);

  // Terminal slice.
  {
    std::vector<double> psi(width);
    spec.psi.eval_slice(spec.T, xs, {}, {}, psi);
    for (int i = 0; i < width; ++i) lat.y(nt, i) = psi[i];
  }
  auto refresh_z = [&](int k) {
    for (int i = 0; i < width; ++i) {
      if (i == 0)
        lat.z(k, i) = (lat.y(k, 1) - lat.y(k, 0)) / h;
      else if (i == width - 1)
        lat.z(k, i) = (lat.y(k, i) - lat.y(k, i - 1)) / h;
      else
        lat.z(k, i) = (lat.y(k, i + 1) - lat.y(k, i - 1)) / (2.0 * h);
    }
  };
  refresh_z(nt);

  for (int k = nt - 1; k >= 0; --k) {
    const double t_next = (k + 1) * dt;
    const double t_here = k * dt;

    for (int i = 0; i < width; ++i) {
      ys[i] = lat.y(k + 1, i);
      zs[i] = lat.z(k + 1, i);
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
    central_gradient(g_s, h, div_g);

    std::span<double> row(&lat.y(k, 0), static_cast<std::size_t>(width));
    for (int i = 0; i < width; ++i) {
      const int iu = std::min(i + 1, width - 1);
      const int id = std::max(i - 1, 0);
      double v = 0.5 * (lat.y(k + 1, iu) + lat.y(k + 1, id));
      v += f_s[i] * dt + div_g[i] * dt;
      for (int q = 0; q < spec.d1; ++q) v += h_s[q][i] * noise.at(k, q);
      row[i] = v;
    }

    switch (mode.kind) {
      case SolveMode::Kind::Free:
        std::fill(dkp.begin(), dkp.end(), 0.0);
        std::fill(dkm.begin(), dkm.end(), 0.0);
        break;
      case SolveMode::Kind::Projected:
        project_step(row, lo_s, up_s, dkp, dkm);
        break;
      case SolveMode::Kind::Penalized:
        penalty_step(row, lo_s, up_s, mode.penalty_level, dt, mode.penalty, dkp, dkm);
        break;
    }
    for (int i = 0; i < width; ++i) {
      lat.kp(k, i) = dkp[i];
      lat.km(k, i) = dkm[i];
    }
    refresh_z(k);
  }

  return lat;
}

FeynmanKacResidual feynman_kac_residual(const GridSolution& grid, const LatticeSolution& lat,
                                        const Discretization& disc) {
  FeynmanKacResidual res;
  const double dx = disc.dx();
  const double x_first = disc.node(0);
  const int nx = disc.nx;
  const int nt = lat.nt();

  for (int k = 0; k <= nt; ++k) {
    auto u = grid.u.slice(k);
    auto gu = grid.u.grad_slice(k);
    for (int i = 0; i < lat.width(); ++i) {
      const double x = lat.node(i);
      if (x < -disc.R + dx || x > disc.R - dx) continue;
      const double uval = interp_uniform(u.data(), nx, x_first, dx, x);
      const double gval = interp_uniform(gu.data(), nx, x_first, dx, x);
      res.sup_err_y = std::max(res.sup_err_y, std::fabs(lat.y(k, i) - uval));
      res.sup_err_z = std::max(res.sup_err_z, std::fabs(lat.z(k, i) - gval));
    }
  }
  return res;
}

McEstimate measure_mc(const LatticeSolution& lat, const Expr& phi, MeasureSide side, int paths,
                      std::uint64_t seed, const Discretization& disc) {
  if (paths < 1) throw ConfigError("measure_mc: path count must be >= 1");
  if (phi.uses(Var::Y) || phi.uses(Var::Z1))
    throw ConfigError("measure_mc: phi must be a function of (t, x) only");

  const double domain = 2.0 * disc.R;
  const double h = lat.h();
  const double dt = lat.dt();
  const int nt = lat.nt();

  std::vector<double> value(paths, 0.0);
  parallel_for(paths, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      GaussianRng rng(subseed(seed, p));
      double pos = -disc.R + domain * rng.uniform();
      double acc = 0.0;
      EvalEnv env;
      for (int k = 0; k < nt; ++k) {
        const double dk = (side == MeasureSide::Plus) ? lat.interp_kp(k, pos) : lat.interp_km(k, pos);
        if (dk != 0.0) {
          env.t = k * dt;
          env.x = pos;
          acc += phi.eval(env) * dk;
        }
        pos += rng.coin() ? h : -h;
      }
      value[p] = domain * acc;
    }
  });

  double mean = 0.0;
  for (double v : value) mean += v;
  mean /= paths;
  double var = 0.0;
  for (double v : value) var += (v - mean) * (v - mean);
  McEstimate out;
  out.estimate = mean;
  out.stderr_ = paths > 1 ? std::sqrt(var / (paths - 1)) / std::sqrt(static_cast<double>(paths)) : 0.0;
  return out;
}

EnergyCheckResult energy_identity_check(const ProblemSpec& spec, const Discretization& disc,
                                        int paths, std::uint64_t seed) {
  spec.validate();
  disc.validate();
  if (paths < 2) throw ConfigError("energy_identity_check: need at least 2 paths");

  // The identity is stated for the deterministic pure lower-obstacle
  // potential: zero sources, zero noise, upper barrier never active.
  auto is_zero = [&](const Expr& e) {
    if (e.uses(Var::Y) || e.uses(Var::Z1)) return false;
    const auto xs = disc.nodes();
    std::vector<double> out(xs.size());
    for (double t : {0.0, 0.5 * spec.T, spec.T}) {
      e.eval_slice(t, xs, {}, {}, out);
      for (double v : out)
        if (v != 0.0) return false;
    }
    return true;
  };
  if (!is_zero(spec.f) || !is_zero(spec.g)) throw IllPosed("energy identity requires f = g = 0");
  for (const auto& hi : spec.h)
    if (!is_zero(hi)) throw IllPosed("energy identity requires h = 0 (no noise)");

  const double dt = disc.dt(spec.T);
  const double dx = disc.dx();
  const int nt = disc.nt;
  const int nx = disc.nx;

  NoisePath zero_noise;
  zero_noise.nt = nt;
  zero_noise.d1 = spec.d1;
  zero_noise.dt = dt;
  zero_noise.increments.assign(static_cast<std::size_t>(nt) * spec.d1, 0.0);

  GridSolution sol = solve(spec, disc, zero_noise, nullptr, SolveMode::projected());
  if (sol.nu_minus.total_mass() > 0.0)
    throw IllPosed("upper obstacle is active; the energy identity only covers the lower potential");

  // Pointwise K+ increments (cell mass / dx).
  std::vector<double> dkp(static_cast<std::size_t>(nt) * nx);
  for (int k = 0; k < nt; ++k)
    for (int j = 0; j < nx; ++j) dkp[static_cast<std::size_t>(k) * nx + j] = sol.nu_plus.at(k, j) / dx;

  EnergyCheckResult res;
  std::vector<int> kc(5);
  for (int c = 0; c < 5; ++c) {
    kc[c] = nt * c / 5;
    res.checkpoints.push_back(kc[c] * dt);
  }

  // Left side from the grid energy series (trapezoid in time).
  res.lhs.resize(5);
  for (int c = 0; c < 5; ++c) {
    double acc = sol.diagnostics.l2_u_sq[kc[c]];
    for (int k = kc[c]; k < nt; ++k)
      acc += 0.5 * (sol.diagnostics.l2_grad_sq[k] + sol.diagnostics.l2_grad_sq[k + 1]) * dt;
    res.lhs[c] = acc;
  }

  // Right side: E^m (A_T - A_t)^2 by uniform-start random walks.
  const double domain = 2.0 * disc.R;
  const double h = std::sqrt(dt);
  const double x_first = disc.node(0);
  std::vector<double> tail(static_cast<std::size_t>(paths) * 5);
  parallel_for(paths, [&](std::size_t begin, std::size_t end) {
    std::vector<double> a_at(5);
    for (std::size_t p = begin; p < end; ++p) {
      GaussianRng rng(subseed(seed, p));
      double pos = -disc.R + domain * rng.uniform();
      double acc = 0.0;
      int next_cp = 0;
      for (int k = 0; k < nt; ++k) {
        while (next_cp < 5 && kc[next_cp] == k) a_at[next_cp++] = acc;
        acc += interp_uniform(dkp.data() + static_cast<std::size_t>(k) * nx, nx, x_first, dx, pos);
        pos += rng.coin() ? h : -h;
      }
      while (next_cp < 5) a_at[next_cp++] = acc;
      for (int c = 0; c < 5; ++c) {
        const double d = acc - a_at[c];
        tail[p * 5 + c] = domain * d * d;
      }
    }
  });

  res.rhs.assign(5, 0.0);
  res.rhs_stderr.assign(5, 0.0);
  for (int c = 0; c < 5; ++c) {
    double mean = 0.0;
    for (int p = 0; p < paths; ++p) mean += tail[static_cast<std::size_t>(p) * 5 + c];
    mean /= paths;
    double var = 0.0;
    for (int p = 0; p < paths; ++p) {
      const double d = tail[static_cast<std::size_t>(p) * 5 + c] - mean;
      var += d * d;
    }
    res.rhs[c] = mean;
    res.rhs_stderr[c] = std::sqrt(var / (paths - 1)) / std::sqrt(static_cast<double>(paths));
    const double denom = std::max(std::fabs(res.lhs[c]), 1e-300);
    res.max_rel_err = std::max(res.max_rel_err, std::fabs(res.lhs[c] - res.rhs[c]) / denom);
  }
  return res;
}

}  // namespace dospde

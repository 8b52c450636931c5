#include "dospde/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <tuple>

#include "dospde/errors.hpp"
#include "dospde/parallel.hpp"

namespace dospde {

namespace {

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> levels;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      levels.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad penalty level '" + tok + "'");
    }
  }
  return levels;
}

}  // namespace

// ---------------------------------------------------------------------------
// Comparison

ComparisonReport check_comparison(const ProblemSpec& spec1, const ProblemSpec& spec2,
                                  const Discretization& disc, const NoisePath& noise) {
  spec1.validate();
  spec2.validate();
  disc.validate();

  if (!(spec1.g == spec2.g)) throw PreconditionUnmet("comparison requires a shared g");
  if (spec1.h.size() != spec2.h.size()) throw PreconditionUnmet("comparison requires a shared h");
  for (std::size_t i = 0; i < spec1.h.size(); ++i)
    if (!(spec1.h[i] == spec2.h[i])) throw PreconditionUnmet("comparison requires a shared h");
  if (spec1.T != spec2.T) throw PreconditionUnmet("comparison requires a shared horizon");

  const auto xs = disc.nodes();
  const double dt = disc.dt(spec1.T);
  std::vector<double> a(disc.nx), b(disc.nx);

  spec1.psi.eval_slice(spec1.T, xs, {}, {}, a);
  spec2.psi.eval_slice(spec2.T, xs, {}, {}, b);
  for (int j = 0; j < disc.nx; ++j)
    if (a[j] > b[j]) throw PreconditionUnmet("psi1 <= psi2 fails at x = " + std::to_string(xs[j]));

  for (int k = 0; k <= disc.nt; ++k) {
    const double t = k * dt;
    spec1.lower.eval_slice(t, xs, {}, {}, a);
    spec2.lower.eval_slice(t, xs, {}, {}, b);
    for (int j = 0; j < disc.nx; ++j)
      if (a[j] > b[j]) throw PreconditionUnmet("L1 <= L2 fails at t = " + std::to_string(t));
    spec1.upper.eval_slice(t, xs, {}, {}, a);
    spec2.upper.eval_slice(t, xs, {}, {}, b);
    for (int j = 0; j < disc.nx; ++j)
      if (a[j] > b[j]) throw PreconditionUnmet("U1 <= U2 fails at t = " + std::to_string(t));
  }

  auto solve_one = [&](const ProblemSpec& s) {
    if (s.coefficients_nonlinear()) {
      PicardResult r = picard_solve(s, disc, noise, 1e-10, 200);
      r.require_converged();
      return std::move(r.solution);
    }
    return solve(s, disc, noise, nullptr, SolveMode::projected());
  };

  GridSolution sol1 = solve_one(spec1);
  GridSolution sol2 = solve_one(spec2);

  ComparisonReport rep;

  // Hypothesis on f: f1 <= f2 along the first solution, sampled post hoc.
  for (int k = 0; k < disc.nt && !rep.conditional; ++k) {
    const double t = (k + 1) * dt;
    auto ys = sol1.u.slice(k + 1);
    auto zs = sol1.u.grad_slice(k + 1);
    spec1.f.eval_slice(t, xs, ys, zs, a);
    spec2.f.eval_slice(t, xs, ys, zs, b);
    for (int j = 0; j < disc.nx; ++j) {
      if (a[j] > b[j]) {
        rep.conditional = true;
        rep.detail = "f1 <= f2 along u1 fails at t = " + std::to_string(t) +
                     ", x = " + std::to_string(xs[j]) + "; ordering result is conditional";
        break;
      }
    }
  }

  for (int k = 0; k <= disc.nt; ++k) {
    auto u1 = sol1.u.slice(k);
    auto u2 = sol2.u.slice(k);
    for (int j = 0; j < disc.nx; ++j)
      rep.worst_violation = std::max(rep.worst_violation, u1[j] - u2[j]);
  }
  rep.pass = rep.worst_violation <= 1e-10;
  return rep;
}

// ---------------------------------------------------------------------------
// Penalization sweep

SweepReport check_penalization_sweep(const ProblemSpec& spec, const Discretization& disc,
                                     const NoisePath& noise, std::span<const double> levels,
                                     double tol_excess) {
  if (levels.empty()) throw ConfigError("penalization sweep needs at least one level");

  SweepReport rep;
  if (tol_excess <= 0.0) {
    // Default tolerance scaled by the size of the upper obstacle.
    const auto xs = disc.nodes();
    std::vector<double> up(disc.nx);
    double scale = 0.0;
    const double dt = disc.dt(spec.T);
    for (int k = 0; k <= disc.nt; ++k) {
      spec.upper.eval_slice(k * dt, xs, {}, {}, up);
      for (double v : up) scale = std::max(scale, std::fabs(v));
    }
    tol_excess = 1e-2 * std::max(1.0, scale);
  }
  rep.tol_excess = tol_excess;

  GridSolution projected = solve(spec, disc, noise, nullptr, SolveMode::projected());

  FieldSeries prev_u;
  bool have_prev = false;
  for (double n : levels) {
    GridSolution sol =
        solve(spec, disc, noise, nullptr, SolveMode::penalized(n, PenaltyKind::UpperOnly));
    SweepRow row;
    row.n = n;
    row.max_upper_excess = sol.diagnostics.max_upper_excess;
    row.mass_kp = sol.nu_plus.total_mass();
    row.mass_km = sol.nu_minus.total_mass();
    for (int k = 0; k <= disc.nt; ++k) {
      auto u = sol.u.slice(k);
      auto up = projected.u.slice(k);
      for (int j = 0; j < disc.nx; ++j) {
        row.sup_diff_to_projected = std::max(row.sup_diff_to_projected, std::fabs(u[j] - up[j]));
        if (have_prev && u[j] > prev_u.value(k, j)) rep.monotone_fields = false;
      }
    }
    if (!rep.rows.empty()) {
      if (row.max_upper_excess > rep.rows.back().max_upper_excess) rep.monotone_excess = false;
      if (row.sup_diff_to_projected > rep.rows.back().sup_diff_to_projected)
        rep.monotone_sup_diff = false;
    }
    rep.rows.push_back(row);
    prev_u = std::move(sol.u);
    have_prev = true;
  }

  rep.final_excess = rep.rows.back().max_upper_excess;

  int rate_count = 0;
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    const double d0 = rep.rows[i].sup_diff_to_projected;
    const double d1 = rep.rows[i + 1].sup_diff_to_projected;
    if (d0 > 1e-14 && d1 > 1e-14) {
      rep.empirical_rate += std::log2(d0 / d1);
      ++rate_count;
    }
  }
  if (rate_count > 0) rep.empirical_rate /= rate_count;

  rep.pass = rep.monotone_fields && rep.monotone_excess && rep.monotone_sup_diff &&
             rep.final_excess <= rep.tol_excess;
  return rep;
}

// ---------------------------------------------------------------------------
// Ito residual

PhiKind phi_from_name(const std::string& name) {
  if (name == "square" || name == "x^2") return PhiKind::Square;
  if (name == "possquare" || name == "(x+)^2") return PhiKind::PositiveSquare;
  if (name == "quartic" || name == "x^4/(1+x^2)") return PhiKind::BoundedQuartic;
  throw UnsupportedPhi(name);
}

std::string phi_name(PhiKind kind) {
  switch (kind) {
    case PhiKind::Square: return "square";
    case PhiKind::PositiveSquare: return "possquare";
    case PhiKind::BoundedQuartic: return "quartic";
  }
  return "?";
}

namespace {

struct PhiFuncs {
  double (*phi)(double);
  double (*dphi)(double);
  double (*d2phi)(double);
};

PhiFuncs phi_funcs(PhiKind kind) {
  switch (kind) {
    case PhiKind::Square:
      return {[](double v) { return v * v; }, [](double v) { return 2.0 * v; },
              [](double) { return 2.0; }};
    case PhiKind::PositiveSquare:
      return {[](double v) { return v > 0 ? v * v : 0.0; },
              [](double v) { return v > 0 ? 2.0 * v : 0.0; },
              [](double v) { return v > 0 ? 2.0 : 0.0; }};
    case PhiKind::BoundedQuartic:
      return {[](double v) { return v * v * v * v / (1.0 + v * v); },
              [](double v) {
                const double q = 1.0 + v * v;
                return (4.0 * v * v * v + 2.0 * v * v * v * v * v) / (q * q);
              },
              [](double v) {
                const double v2 = v * v;
                const double q = 1.0 + v2;
                return (12.0 * v2 + 6.0 * v2 * v2 + 2.0 * v2 * v2 * v2) / (q * q * q);
              }};
  }
  return {nullptr, nullptr, nullptr};
}

}  // namespace

ItoReport check_ito_residual(const ProblemSpec& spec, const Discretization& disc,
                             const NoisePath& noise, PhiKind phi) {
  spec.validate();
  if (spec.coefficients_nonlinear())
    throw ConfigError("the integral identity check needs a linear problem");

  const PhiFuncs F = phi_funcs(phi);
  const double dt = disc.dt(spec.T);
  const double dx = disc.dx();
  const int nt = disc.nt;
  const int nx = disc.nx;
  const auto xs = disc.nodes();

  GridSolution sol = solve(spec, disc, noise, nullptr, SolveMode::projected());

  // Coefficient slices at every time level (linear: functions of (t, x) only).
  std::vector<std::vector<double>> f_k(nt + 1, std::vector<double>(nx));
  std::vector<std::vector<double>> g_k(nt + 1, std::vector<double>(nx));
  std::vector<std::vector<std::vector<double>>> h_k(
      nt + 1, std::vector<std::vector<double>>(spec.d1, std::vector<double>(nx)));
  for (int k = 0; k <= nt; ++k) {
    const double t = k * dt;
    spec.f.eval_slice(t, xs, {}, {}, f_k[k]);
    spec.g.eval_slice(t, xs, {}, {}, g_k[k]);
    for (int i = 0; i < spec.d1; ++i) spec.h[i].eval_slice(t, xs, {}, {}, h_k[k][i]);
  }

  // Per-slice spatial sums entering the ds-integrals.
  auto sum_phi = [&](int k) {
    double s = 0.0;
    auto u = sol.u.slice(k);
    for (int j = 0; j < nx; ++j) s += F.phi(u[j]);
    return s * dx;
  };
  auto sum_d2_grad2 = [&](int k) {
    double s = 0.0;
    auto u = sol.u.slice(k);
    auto gu = sol.u.grad_slice(k);
    for (int j = 0; j < nx; ++j) s += F.d2phi(u[j]) * gu[j] * gu[j];
    return s * dx;
  };
  auto sum_d1_f = [&](int k) {
    double s = 0.0;
    auto u = sol.u.slice(k);
    for (int j = 0; j < nx; ++j) s += F.dphi(u[j]) * f_k[k][j];
    return s * dx;
  };
  auto sum_d2_grad_g = [&](int k) {
    double s = 0.0;
    auto u = sol.u.slice(k);
    auto gu = sol.u.grad_slice(k);
    for (int j = 0; j < nx; ++j) s += F.d2phi(u[j]) * gu[j] * g_k[k][j];
    return s * dx;
  };
  auto sum_d2_h2 = [&](int k) {
    double s = 0.0;
    auto u = sol.u.slice(k);
    for (int j = 0; j < nx; ++j) {
      double hh = 0.0;
      for (int i = 0; i < spec.d1; ++i) hh += h_k[k][i][j] * h_k[k][i][j];
      s += F.d2phi(u[j]) * hh;
    }
    return s * dx;
  };

  // Trapezoid over [0, T] of a per-slice sum.
  auto integrate = [&](auto&& slice_sum) {
    double acc = 0.0;
    double prev = slice_sum(0);
    for (int k = 1; k <= nt; ++k) {
      const double cur = slice_sum(k);
      acc += 0.5 * (prev + cur) * dt;
      prev = cur;
    }
    return acc;
  };

  const double term_phi0 = sum_phi(0);
  const double term_grad = 0.5 * integrate(sum_d2_grad2);
  const double term_psi = sum_phi(nt);
  const double term_f = integrate(sum_d1_f);
  const double term_g = -integrate(sum_d2_grad_g);
  const double term_h2 = 0.5 * integrate(sum_d2_h2);

  // Backward stochastic integral: increments against the later slice.
  double term_db = 0.0;
  for (int k = 0; k < nt; ++k) {
    auto u = sol.u.slice(k + 1);
    for (int i = 0; i < spec.d1; ++i) {
      double s = 0.0;
      for (int j = 0; j < nx; ++j) s += F.dphi(u[j]) * h_k[k + 1][i][j];
      term_db += s * dx * noise.at(k, i);
    }
  }

  // Measure term: Phi'(u) at the post-reflection slice against the cell mass.
  double term_nu = 0.0;
  for (int k = 0; k < nt; ++k) {
    auto u = sol.u.slice(k);
    for (int j = 0; j < nx; ++j)
      term_nu += F.dphi(u[j]) * (sol.nu_plus.at(k, j) - sol.nu_minus.at(k, j));
  }

  ItoReport rep;
  rep.lhs = term_phi0 + term_grad;
  rep.rhs = term_psi + term_f + term_g + term_db + term_h2 + term_nu;
  rep.residual = std::fabs(rep.lhs - rep.rhs);
  for (double t : {term_phi0, term_grad, term_psi, term_f, term_g, term_db, term_h2, term_nu})
    rep.largest_term = std::max(rep.largest_term, std::fabs(t));
  rep.rel_residual = rep.residual / std::max(rep.largest_term, 1e-300);
  rep.pass = rep.rel_residual <= 0.05;
  return rep;
}

// ---------------------------------------------------------------------------
// Separability

SeparabilityReport check_separability(const ProblemSpec& spec, const Discretization& disc,
                                      const NoisePath& noise) {
  spec.validate();
  if (!spec.witness) throw PreconditionUnmet("no separability witness in the problem");

  ProblemSpec zspec = spec;
  zspec.f = spec.witness->f;
  zspec.g = spec.witness->g;
  zspec.h = spec.witness->h;
  zspec.psi = spec.witness->psi;
  zspec.lip = LipschitzData{};
  zspec.witness.reset();

  GridSolution zsol = solve(zspec, disc, noise, nullptr, SolveMode::free());

  const auto xs = disc.nodes();
  const double dt = disc.dt(spec.T);
  std::vector<double> lo(disc.nx), up(disc.nx);

  SeparabilityReport rep;
  rep.kappa_hat = std::numeric_limits<double>::infinity();
  rep.max_over_upper = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= disc.nt; ++k) {
    const double t = k * dt;
    spec.lower.eval_slice(t, xs, {}, {}, lo);
    spec.upper.eval_slice(t, xs, {}, {}, up);
    auto z = zsol.u.slice(k);
    for (int j = 0; j < disc.nx; ++j) {
      rep.kappa_hat = std::min(rep.kappa_hat, z[j] - lo[j]);
      rep.max_over_upper = std::max(rep.max_over_upper, z[j] - up[j]);
    }
  }
  rep.pass = rep.kappa_hat > 0.0 && rep.max_over_upper <= 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Declared Lipschitz constants

LipschitzReport check_lipschitz_declared(const ProblemSpec& spec, int samples, std::uint64_t seed,
                                         const LipschitzSampleBox& box) {
  spec.validate();
  LipschitzReport rep;
  GaussianRng rng(seed);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  constexpr double kSlack = 1.0 + 1e-9;

  for (int s = 0; s < samples; ++s) {
    EvalEnv e1, e2;
    e1.t = e2.t = uni(0.0, box.t_max);
    e1.x = e2.x = uni(-box.x_max, box.x_max);
    e1.y = uni(-box.y_max, box.y_max);
    e2.y = uni(-box.y_max, box.y_max);
    e1.z1 = uni(-box.z_max, box.z_max);
    e2.z1 = uni(-box.z_max, box.z_max);
    const double dy = std::fabs(e1.y - e2.y);
    const double dz = std::fabs(e1.z1 - e2.z1);

    auto record = [&](const char* coef, double lhs, double bound) {
      if (bound > 0.0) rep.worst_factor = std::max(rep.worst_factor, lhs / bound);
      if (lhs > bound * kSlack) {
        rep.pass = false;
        if (rep.failures.size() < 10)
          rep.failures.push_back({coef, e1.t, e1.x, e1.y, e2.y, e1.z1, e2.z1, lhs, bound});
      }
    };

    record("f", std::fabs(spec.f.eval(e1) - spec.f.eval(e2)), spec.lip.C * (dy + dz));
    record("g", std::fabs(spec.g.eval(e1) - spec.g.eval(e2)),
           spec.lip.C * dy + spec.lip.alpha * dz);
    double hh = 0.0;
    for (const auto& hi : spec.h) {
      const double d = hi.eval(e1) - hi.eval(e2);
      hh += d * d;
    }
    record("h", std::sqrt(hh), spec.lip.C * dy + spec.lip.beta * dz);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Bundled instances

namespace {

Expr shifted(const Expr& e, double c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", c);
  return Expr::parse("(" + e.print() + ") + " + buf);
}

Instance make_instance(std::string name, const std::string& f, const std::string& g,
                       std::vector<std::string> h, const std::string& psi, const std::string& lo,
                       const std::string& up, LipschitzData lip, double T, double R, int nx, int nt,
                       std::uint64_t seed) {
  Instance inst;
  inst.name = std::move(name);
  inst.spec.T = T;
  inst.spec.d1 = static_cast<int>(h.size());
  inst.spec.f = Expr::parse(f);
  inst.spec.g = Expr::parse(g);
  for (const auto& hi : h) inst.spec.h.push_back(Expr::parse(hi));
  inst.spec.psi = Expr::parse(psi);
  inst.spec.lower = Expr::parse(lo);
  inst.spec.upper = Expr::parse(up);
  inst.spec.lip = lip;
  inst.disc.R = R;
  inst.disc.nx = nx;
  inst.disc.nt = nt;
  inst.disc.theta = 1.0;
  inst.seed = seed;
  return inst;
}

// 3*pi/2: sin(x) has zero flux at the domain ends.
constexpr double kSinR = 4.7123889803846899;
// sqrt(0.2): together with alpha = 0.2 this sits exactly at alpha + beta^2/2 = 0.3.
constexpr double kBetaMixed = 0.44721359549995793;

const std::vector<Instance>& instance_registry() {
  static const std::vector<Instance> reg = [] {
    std::vector<Instance> v;
    v.push_back(make_instance("reflected_ode", "1", "0", {"0"}, "0", "-10", "0.3",
                              {0, 0, 0}, 1.0, 6.0, 200, 400, 12345));
    v.push_back(make_instance("reflected_ode_lower", "-1", "0", {"0"}, "0", "-0.3", "10",
                              {0, 0, 0}, 1.0, 6.0, 200, 400, 12345));
    v.push_back(make_instance("noisy_reflected", "1", "0", {"0.4"}, "0", "-10", "0.3",
                              {0, 0, 0}, 1.0, 6.0, 200, 400, 777));
    v.push_back(make_instance("exp_decay", "-y", "0", {"0"}, "1", "-10", "10",
                              {1, 0, 0}, 1.0, 6.0, 200, 400, 42));
    v.push_back(make_instance("sin_free", "0", "0", {"0"}, "sin(x)", "-10", "10",
                              {0, 0, 0}, 1.0, kSinR, 200, 400, 42));
    // The bump tapers to zero at t = T so the terminal sandwich holds.
    v.push_back(make_instance("bump_energy", "0", "0", {"0"}, "0",
                              "max(0.2 - x*x, 0)*clamp(4*(1 - t), 0, 1)", "10",
                              {0, 0, 0}, 1.0, 6.0, 200, 200, 99));
    {
      char h1[64];
      std::snprintf(h1, sizeof(h1), "%.17g*z1", kBetaMixed);
      Instance m = make_instance("mixed_zcoupling", "0.3*y", "0.2*z1", {h1}, "sin(x)", "-10", "10",
                                 {0.3, 0.2, kBetaMixed}, 1.0, kSinR, 150, 200, 4242);
      v.push_back(std::move(m));
    }
    {
      Instance s = make_instance("separability_demo", "0", "0", {"0"}, "0", "-0.1", "1.5",
                                 {0, 0, 0}, 1.0, 6.0, 100, 100, 7);
      SeparabilityWitness w;
      w.f = Expr::parse("1");
      w.g = Expr::parse("0");
      w.h = {Expr::parse("0")};
      w.psi = Expr::parse("0");
      s.spec.witness = std::move(w);
      v.push_back(std::move(s));
    }
    v.push_back(make_instance("lipschitz_clamp", "clamp(y, -1, 1)", "0", {"0.4*z1"}, "0", "-10",
                              "10", {1, 0, 0.4}, 1.0, 6.0, 100, 100, 7));
    v.push_back(make_instance("broken_contraction", "-y", "0", {"0"}, "1", "-10", "10",
                              {1, 0.4, 0.6}, 1.0, 6.0, 100, 100, 7));
    return v;
  }();
  return reg;
}

}  // namespace

const Instance& bundled(const std::string& name) {
  for (const auto& inst : instance_registry()) {
    if (inst.name == name) return inst;
  }
  throw ConfigError("unknown bundled instance '" + name + "'");
}

std::vector<std::string> bundled_names() {
  std::vector<std::string> names;
  for (const auto& inst : instance_registry()) names.push_back(inst.name);
  return names;
}

// ---------------------------------------------------------------------------
// Suite

std::vector<SuiteEntry> default_suite() {
  return {
      {"hypotheses", "reflected_ode", ""},
      {"comparison", "reflected_ode", "identical"},
      {"comparison", "reflected_ode", "shift"},
      {"sweep", "reflected_ode", "1,2,4,8,16,32,64,128,256"},
      {"sweep", "noisy_reflected", "1,2,4,8,16,32,64,128,256"},
      {"ito", "reflected_ode", "square"},
      {"ito", "reflected_ode", "possquare"},
      {"separability", "separability_demo", ""},
      {"lipschitz", "lipschitz_clamp", ""},
      {"feynman_kac", "reflected_ode", ""},
      {"feynman_kac", "sin_free", ""},
      {"measure", "reflected_ode", "100000"},
      {"picard", "exp_decay", ""},
      {"picard", "mixed_zcoupling", ""},
      {"energy", "bump_energy", "200000"},
  };
}

bool SuiteSummary::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

namespace {

CheckResult run_entry(const SuiteEntry& entry) {
  const Instance& inst = bundled(entry.instance);
  const double dt = inst.disc.dt(inst.spec.T);
  CheckResult res;
  res.check = entry.check;
  res.instance = entry.instance;

  auto noise = [&] { return make_noise(inst.seed, inst.disc.nt, inst.spec.d1, dt); };

  if (entry.check == "hypotheses") {
    HypothesisReport rep = check_hypotheses(inst.spec, inst.disc);
    res.pass = rep.admissible();
    res.metric_name = "violations";
    res.metric = static_cast<double>(rep.violations.size());
    if (!rep.violations.empty()) res.detail = rep.violations.front().hypothesis;
  } else if (entry.check == "comparison") {
    ProblemSpec spec2 = inst.spec;
    if (entry.param == "shift") {
      spec2.f = shifted(spec2.f, 0.25);
      spec2.psi = shifted(spec2.psi, 0.1);
      spec2.lower = shifted(spec2.lower, 0.1);
      spec2.upper = shifted(spec2.upper, 0.1);
    } else if (entry.param != "identical" && !entry.param.empty()) {
      throw ConfigError("comparison param must be 'identical' or 'shift'");
    }
    ComparisonReport rep = check_comparison(inst.spec, spec2, inst.disc, noise());
    res.pass = rep.pass && !rep.conditional;
    res.metric_name = "worst_violation";
    res.metric = rep.worst_violation;
    res.detail = rep.detail;
  } else if (entry.check == "sweep") {
    const std::string levels_csv = entry.param.empty() ? "1,2,4,8,16,32,64,128,256" : entry.param;
    std::vector<double> levels = parse_levels(levels_csv);
    SweepReport rep = check_penalization_sweep(inst.spec, inst.disc, noise(), levels);
    res.pass = rep.pass;
    res.metric_name = "final_excess";
    res.metric = rep.final_excess;
  } else if (entry.check == "ito") {
    const PhiKind phi = phi_from_name(entry.param.empty() ? "square" : entry.param);
    ItoReport coarse = check_ito_residual(inst.spec, inst.disc, noise(), phi);
    Discretization fine = inst.disc;
    fine.nx = 2 * inst.disc.nx;
    fine.nt = 2 * inst.disc.nt;
    NoisePath fine_noise = make_noise(inst.seed, fine.nt, inst.spec.d1, fine.dt(inst.spec.T));
    ItoReport refined = check_ito_residual(inst.spec, fine, fine_noise, phi);
    res.pass = coarse.pass && refined.rel_residual * 1.5 <= coarse.rel_residual + 1e-12;
    res.metric_name = "rel_residual";
    res.metric = coarse.rel_residual;
  } else if (entry.check == "separability") {
    SeparabilityReport rep = check_separability(inst.spec, inst.disc, noise());
    res.pass = rep.pass;
    res.metric_name = "kappa_hat";
    res.metric = rep.kappa_hat;
  } else if (entry.check == "lipschitz") {
    LipschitzSampleBox box{inst.spec.T, inst.disc.R, 5.0, 5.0};
    LipschitzReport rep = check_lipschitz_declared(inst.spec, 20000, inst.seed, box);
    res.pass = rep.pass;
    res.metric_name = "worst_factor";
    res.metric = rep.worst_factor;
  } else if (entry.check == "feynman_kac") {
    NoisePath np = noise();
    GridSolution grid = solve(inst.spec, inst.disc, np, nullptr, SolveMode::projected());
    LatticeSolution lat = lattice_solve(inst.spec, inst.disc, np, SolveMode::projected());
    FeynmanKacResidual rep = feynman_kac_residual(grid, lat, inst.disc);
    res.pass = rep.sup_err_y <= 5e-2;
    res.metric_name = "sup_err_y";
    res.metric = rep.sup_err_y;
  } else if (entry.check == "measure") {
    const int paths = entry.param.empty() ? 100000 : std::stoi(entry.param);
    NoisePath np = noise();
    GridSolution grid = solve(inst.spec, inst.disc, np, nullptr, SolveMode::projected());
    LatticeSolution lat = lattice_solve(inst.spec, inst.disc, np, SolveMode::projected());
    const Expr one = Expr::constant(1.0);
    bool pass = true;
    double worst = 0.0;
    const McEstimate em = measure_mc(lat, one, MeasureSide::Minus, paths, inst.seed + 1, inst.disc);
    const McEstimate ep = measure_mc(lat, one, MeasureSide::Plus, paths, inst.seed + 2, inst.disc);
    const double ref_m = grid.nu_minus.total_mass();
    const double ref_p = grid.nu_plus.total_mass();
    for (auto [est, se, ref] : {std::tuple{em.estimate, em.stderr_, ref_m},
                                std::tuple{ep.estimate, ep.stderr_, ref_p}}) {
      const double tol = 3.0 * se + 0.05 * ref;
      const double err = std::fabs(est - ref);
      if (err > tol) pass = false;
      if (tol > 0.0) worst = std::max(worst, err / tol);
    }
    res.pass = pass;
    res.metric_name = "err_over_tol";
    res.metric = worst;
  } else if (entry.check == "picard") {
    PicardResult rep = picard_solve(inst.spec, inst.disc, noise(), 1e-5, 200);
    rep.require_converged();
    bool ratios_ok = true;
    double max_ratio = 0.0;
    for (const auto& it : rep.trace) {
      if (it.iter < 2) continue;
      max_ratio = std::max(max_ratio, it.ratio);
      if (!(it.ratio <= rep.constants.delta0 + 0.1)) ratios_ok = false;
    }
    res.pass = rep.converged && ratios_ok;
    res.metric_name = "max_ratio";
    res.metric = max_ratio;
  } else if (entry.check == "energy") {
    const int paths = entry.param.empty() ? 200000 : std::stoi(entry.param);
    EnergyCheckResult rep = energy_identity_check(inst.spec, inst.disc, paths, inst.seed);
    bool pass = true;
    for (std::size_t c = 0; c < rep.lhs.size(); ++c) {
      const double tol = 0.05 * std::fabs(rep.lhs[c]) + 3.0 * rep.rhs_stderr[c];
      if (std::fabs(rep.lhs[c] - rep.rhs[c]) > tol) pass = false;
    }
    res.pass = pass;
    res.metric_name = "max_rel_err";
    res.metric = rep.max_rel_err;
  } else {
    throw ConfigError("unknown check '" + entry.check + "'");
  }
  return res;
}

}  // namespace

SuiteSummary run_suite(const std::vector<SuiteEntry>& entries) {
  // Unknown names are config errors, reported before any work is done.
  for (const auto& e : entries) {
    bundled(e.instance);
    static const std::vector<std::string> known = {
        "hypotheses", "comparison", "sweep",   "ito",    "separability",
        "lipschitz",  "feynman_kac", "measure", "picard", "energy"};
    if (std::find(known.begin(), known.end(), e.check) == known.end())
      throw ConfigError("unknown check '" + e.check + "'");
  }

  SuiteSummary summary;
  for (const auto& e : entries) {
    try {
      summary.results.push_back(run_entry(e));
    } catch (const Error& err) {
      CheckResult res;
      res.check = e.check;
      res.instance = e.instance;
      res.pass = false;
      res.metric_name = "error";
      res.detail = "E:" + err.kind() + ":" + err.what();
      summary.results.push_back(res);
    }
  }
  return summary;
}

}  // namespace dospde

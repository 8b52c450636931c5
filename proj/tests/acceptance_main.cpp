// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, in code.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dospde/errors.hpp"
#include "dospde/grid_solver.hpp"
#include "dospde/lattice.hpp"
#include "dospde/picard.hpp"
#include "dospde/validation.hpp"

namespace fs = std::filesystem;
using namespace dospde;

namespace {

struct Harness {
  int failures = 0;

  void criterion(int id, const std::string& label, const std::function<std::string()>& body) {
    std::string note;
    bool ok = true;
    try {
      note = body();
    } catch (const std::exception& e) {
      ok = false;
      note = std::string("exception: ") + e.what();
    }
    if (note.rfind("FAIL", 0) == 0) ok = false;
    std::printf("[%s] criterion %2d: %s — %s\n", ok ? "PASS" : "FAIL", id, label.c_str(),
                note.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

NoisePath zero_noise(const Discretization& disc, double T, int d1 = 1) {
  NoisePath n;
  n.nt = disc.nt;
  n.d1 = d1;
  n.dt = disc.dt(T);
  n.increments.assign(static_cast<std::size_t>(disc.nt) * d1, 0.0);
  return n;
}

NoisePath instance_noise(const Instance& inst) {
  return make_noise(inst.seed, inst.disc.nt, inst.spec.d1, inst.disc.dt(inst.spec.T));
}

double skorokhod_pairing(const ProblemSpec& spec, const Discretization& disc,
                         const GridSolution& sol) {
  const auto xs = disc.nodes();
  const double dt = disc.dt(spec.T);
  std::vector<double> lo(disc.nx), up(disc.nx);
  double total = 0.0;
  for (int k = 0; k < disc.nt; ++k) {
    spec.lower.eval_slice(k * dt, xs, {}, {}, lo);
    spec.upper.eval_slice(k * dt, xs, {}, {}, up);
    auto u = sol.u.slice(k);
    for (int j = 0; j < disc.nx; ++j) {
      total += std::fabs((u[j] - lo[j]) * sol.nu_plus.at(k, j));
      total += std::fabs((up[j] - u[j]) * sol.nu_minus.at(k, j));
    }
  }
  return total;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DOSPDE_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

// Ordered random linear pairs for the comparison criterion.
struct OrderedPair {
  ProblemSpec lo, hi;
};

OrderedPair random_ordered_pair(GaussianRng& rng) {
  auto uni = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
  char buf[256];

  OrderedPair p;
  p.lo.T = 1.0;
  p.lo.d1 = 1;
  const double f0 = uni(-0.6, 0.6);
  const double amp = uni(-0.5, 0.5);
  const double off = uni(-0.2, 0.2);
  const double hcoef = uni(-0.5, 0.5);
  const double upper0 = uni(0.35, 0.9);
  const double lower0 = uni(-0.9, -0.35);

  std::snprintf(buf, sizeof(buf), "%.17g", f0);
  p.lo.f = Expr::parse(buf);
  p.lo.g = Expr::parse("0");
  std::snprintf(buf, sizeof(buf), "%.17g", hcoef);
  p.lo.h = {Expr::parse(buf)};
  std::snprintf(buf, sizeof(buf), "%.17g*sin(x) + %.17g", amp, off);
  p.lo.psi = Expr::parse(buf);
  std::snprintf(buf, sizeof(buf), "%.17g", lower0);
  p.lo.lower = Expr::parse(buf);
  std::snprintf(buf, sizeof(buf), "%.17g", upper0);
  p.lo.upper = Expr::parse(buf);

  p.hi = p.lo;  // shared g, h
  const double df = uni(0.0, 0.5);
  const double dpsi = uni(0.0, 0.15);
  const double dobs = uni(0.0, 0.3);
  std::snprintf(buf, sizeof(buf), "%.17g", f0 + df);
  p.hi.f = Expr::parse(buf);
  std::snprintf(buf, sizeof(buf), "%.17g*sin(x) + %.17g", amp, off + dpsi);
  p.hi.psi = Expr::parse(buf);
  std::snprintf(buf, sizeof(buf), "%.17g", lower0 + dobs);
  p.hi.lower = Expr::parse(buf);
  std::snprintf(buf, sizeof(buf), "%.17g", upper0 + dobs);
  p.hi.upper = Expr::parse(buf);

  // Keep the terminal sandwich valid for both problems: |psi| <= 0.35 always,
  // |amp| + |off| + dpsi <= 0.5 + 0.2 + 0.15 < min(|upper0|, |lower0|) fails in
  // general, so clamp psi into the band instead.
  std::snprintf(buf, sizeof(buf), "clamp(%.17g*sin(x) + %.17g, %.17g, %.17g)", amp, off, lower0,
                upper0);
  p.lo.psi = Expr::parse(buf);
  std::snprintf(buf, sizeof(buf), "clamp(%.17g*sin(x) + %.17g, %.17g, %.17g)", amp, off + dpsi,
                lower0 + dobs, upper0 + dobs);
  p.hi.psi = Expr::parse(buf);
  return p;
}

}  // namespace

int main() {
  Harness h;

  // -------------------------------------------------------------------------
  h.criterion(1, "free mode is exact on spatial constants (u = T - t)", [] {
    ProblemSpec s;
    s.T = 1.0;
    s.d1 = 1;
    s.f = Expr::parse("1");
    s.g = Expr::parse("0");
    s.h = {Expr::parse("0")};
    s.psi = Expr::parse("0");
    s.lower = Expr::parse("-10");
    s.upper = Expr::parse("10");
    Discretization disc;
    disc.R = 6.0;
    disc.nx = 200;
    disc.nt = 400;
    const GridSolution sol = solve(s, disc, zero_noise(disc, s.T), nullptr, SolveMode::free());
    double worst = 0.0;
    const double dt = disc.dt(s.T);
    for (int k = 0; k <= disc.nt; ++k) {
      const double expect = s.T - k * dt;
      for (int j = 0; j < disc.nx; ++j)
        worst = std::max(worst, std::fabs(sol.u.value(k, j) - expect));
    }
    if (worst > 1e-12) return "FAIL max |u - (T - t)| = " + fmt(worst);
    return "max |u - (T - t)| = " + fmt(worst) + " <= 1e-12";
  });

  // -------------------------------------------------------------------------
  h.criterion(2, "reflected-ODE oracle (both barriers, mass within 2%)", [] {
    std::string note;
    for (const char* name : {"reflected_ode", "reflected_ode_lower"}) {
      const Instance& inst = bundled(name);
      const GridSolution sol = solve(inst.spec, inst.disc, zero_noise(inst.disc, inst.spec.T),
                                     nullptr, SolveMode::projected());
      const bool upper_case = std::string(name) == "reflected_ode";
      const double target = upper_case ? 0.3 : -0.3;
      double worst = 0.0;
      auto u0 = sol.u.slice(0);
      for (int j = 0; j < inst.disc.nx; ++j) worst = std::max(worst, std::fabs(u0[j] - target));
      const double active_mass =
          upper_case ? sol.nu_minus.total_mass() : sol.nu_plus.total_mass();
      const double idle_mass = upper_case ? sol.nu_plus.total_mass() : sol.nu_minus.total_mass();
      const double expect_mass = 0.7 * 2 * inst.disc.R;
      if (worst > 1e-2) return "FAIL " + std::string(name) + ": |u(0) - target| = " + fmt(worst);
      if (std::fabs(active_mass - expect_mass) > 0.02 * expect_mass)
        return "FAIL " + std::string(name) + ": mass " + fmt(active_mass) + " vs " +
               fmt(expect_mass);
      if (idle_mass > 1e-8)
        return "FAIL " + std::string(name) + ": idle measure mass " + fmt(idle_mass);
      note += std::string(name) + " mass " + fmt(active_mass) + "; ";
    }
    return note + "targets within 2%";
  });

  // -------------------------------------------------------------------------
  h.criterion(3, "discrete Skorokhod pairing vanishes bit-level on every bundled instance", [] {
    double total = 0.0;
    int covered = 0;
    for (const std::string& name : bundled_names()) {
      const Instance& inst = bundled(name);
      if (!validate_contraction(inst.spec.lip)) continue;  // deliberately broken instance
      const NoisePath noise = instance_noise(inst);
      GridSolution sol;
      if (inst.spec.coefficients_nonlinear()) {
        PicardResult r = picard_solve(inst.spec, inst.disc, noise, 1e-5, 200);
        r.require_converged();
        sol = std::move(r.solution);
      } else {
        sol = solve(inst.spec, inst.disc, noise, nullptr, SolveMode::projected());
      }
      total += skorokhod_pairing(inst.spec, inst.disc, sol);
      ++covered;
    }
    if (total != 0.0) return "FAIL pairing sum = " + fmt(total);
    return "sum over " + std::to_string(covered) + " instances = 0 exactly";
  });

  // -------------------------------------------------------------------------
  h.criterion(4, "penalization is monotone and the terminal excess <= 5e-3", [] {
    const Instance& inst = bundled("reflected_ode");
    const std::vector<double> levels = {1, 2, 4, 8, 16, 32, 64, 128, 256};
    const SweepReport rep =
        check_penalization_sweep(inst.spec, inst.disc, instance_noise(inst), levels);
    if (!rep.monotone_fields) return std::string("FAIL nodewise monotonicity broken");
    if (!rep.monotone_excess) return std::string("FAIL excess not monotone");
    if (rep.final_excess > 5e-3) return "FAIL final excess = " + fmt(rep.final_excess);
    return "final excess " + fmt(rep.final_excess) + ", exact monotonicity";
  });

  // -------------------------------------------------------------------------
  h.criterion(5, "comparison on 20 randomized ordered pairs (grid and lattice)", [] {
    GaussianRng rng(31415);
    Discretization disc;
    disc.R = 6.0;
    disc.nx = 100;
    disc.nt = 200;
    double worst_grid = 0.0, worst_lat = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const OrderedPair pair = random_ordered_pair(rng);
      const NoisePath noise = make_noise(1000 + trial, disc.nt, 1, disc.dt(pair.lo.T));

      const GridSolution glo = solve(pair.lo, disc, noise, nullptr, SolveMode::projected());
      const GridSolution ghi = solve(pair.hi, disc, noise, nullptr, SolveMode::projected());
      for (int k = 0; k <= disc.nt; ++k)
        for (int j = 0; j < disc.nx; ++j)
          worst_grid = std::max(worst_grid, glo.u.value(k, j) - ghi.u.value(k, j));

      const LatticeSolution llo = lattice_solve(pair.lo, disc, noise, SolveMode::projected());
      const LatticeSolution lhi = lattice_solve(pair.hi, disc, noise, SolveMode::projected());
      for (int k = 0; k <= disc.nt; ++k)
        for (int i = 0; i < llo.width(); ++i)
          worst_lat = std::max(worst_lat, llo.y(k, i) - lhi.y(k, i));
    }
    if (worst_grid > 1e-10 || worst_lat > 1e-10)
      return "FAIL worst grid " + fmt(worst_grid) + ", lattice " + fmt(worst_lat);
    return "worst violation: grid " + fmt(worst_grid) + ", lattice " + fmt(worst_lat);
  });

  // -------------------------------------------------------------------------
  h.criterion(6, "measured Picard contraction and the exponential closed form", [] {
    std::string note;
    for (const char* name : {"exp_decay", "mixed_zcoupling"}) {
      const Instance& inst = bundled(name);
      const PicardResult res = picard_solve(inst.spec, inst.disc, instance_noise(inst), 1e-5, 200);
      res.require_converged();
      double max_ratio = 0.0;
      for (const auto& it : res.trace) {
        if (it.iter < 2) continue;
        max_ratio = std::max(max_ratio, it.ratio);
        if (!(it.ratio <= res.constants.delta0 + 0.1))
          return "FAIL " + std::string(name) + ": ratio " + fmt(it.ratio) + " > delta0 + 0.1 = " +
                 fmt(res.constants.delta0 + 0.1);
      }
      note += std::string(name) + " max ratio " + fmt(max_ratio) + " (bound " +
              fmt(res.constants.delta0 + 0.1) + "); ";
      if (std::string(name) == "exp_decay") {
        const double expect = std::exp(-inst.spec.T);
        double worst = 0.0;
        auto u0 = res.solution.u.slice(0);
        for (int j = 0; j < inst.disc.nx; ++j) worst = std::max(worst, std::fabs(u0[j] - expect));
        if (worst > 1e-3) return "FAIL |u(0) - e^{-T}| = " + fmt(worst);
        note += "|u(0) - e^{-T}| = " + fmt(worst) + "; ";
      }
    }
    return note;
  });

  // -------------------------------------------------------------------------
  h.criterion(7, "grid/lattice agreement <= 5e-2, improving >= 1.4x under refinement", [] {
    std::string note;
    for (const char* name : {"reflected_ode", "sin_free"}) {
      const Instance& inst = bundled(name);
      auto residual = [&](const Discretization& d) {
        const NoisePath noise = make_noise(inst.seed, d.nt, inst.spec.d1, d.dt(inst.spec.T));
        const GridSolution grid = solve(inst.spec, d, noise, nullptr, SolveMode::projected());
        const LatticeSolution lat = lattice_solve(inst.spec, d, noise, SolveMode::projected());
        return feynman_kac_residual(grid, lat, d).sup_err_y;
      };
      const double err = residual(inst.disc);
      Discretization fine = inst.disc;
      fine.nt *= 2;
      fine.nx = 2 * inst.disc.nx + 1;
      const double err_fine = residual(fine);
      if (err > 5e-2) return "FAIL " + std::string(name) + ": sup err " + fmt(err);
      if (err_fine * 1.4 > err + 1e-12)
        return "FAIL " + std::string(name) + ": refinement " + fmt(err) + " -> " + fmt(err_fine);
      note += std::string(name) + " " + fmt(err) + " -> " + fmt(err_fine) + "; ";
    }
    return note;
  });

  // -------------------------------------------------------------------------
  h.criterion(8, "Monte Carlo measure mass matches the grid within 3 stderr + 5%", [] {
    const Instance& inst = bundled("reflected_ode");
    const NoisePath noise = instance_noise(inst);
    const GridSolution grid = solve(inst.spec, inst.disc, noise, nullptr, SolveMode::projected());
    const LatticeSolution lat = lattice_solve(inst.spec, inst.disc, noise, SolveMode::projected());
    const McEstimate est =
        measure_mc(lat, Expr::constant(1.0), MeasureSide::Minus, 100000, inst.seed + 1, inst.disc);
    const double ref = grid.nu_minus.total_mass();
    const double err = std::fabs(est.estimate - ref);
    const double tol = 3 * est.stderr_ + 0.05 * ref;
    if (err > tol) return "FAIL |mc - grid| = " + fmt(err) + " > " + fmt(tol);
    return "mc " + fmt(est.estimate) + " vs grid " + fmt(ref) + " (err " + fmt(err) + " <= " +
           fmt(tol) + ")";
  });

  // -------------------------------------------------------------------------
  h.criterion(9, "energy identity on the bump potential (5% + 3 stderr)", [] {
    const Instance& inst = bundled("bump_energy");
    const EnergyCheckResult res = energy_identity_check(inst.spec, inst.disc, 200000, inst.seed);
    for (std::size_t c = 0; c < res.lhs.size(); ++c) {
      const double tol = 0.05 * std::fabs(res.lhs[c]) + 3 * res.rhs_stderr[c];
      if (std::fabs(res.lhs[c] - res.rhs[c]) > tol)
        return "FAIL at t = " + fmt(res.checkpoints[c]) + ": lhs " + fmt(res.lhs[c]) + " rhs " +
               fmt(res.rhs[c]);
    }
    return "max rel err " + fmt(res.max_rel_err) + " over 5 checkpoints";
  });

  // -------------------------------------------------------------------------
  h.criterion(10, "integral identity residual <= 5%, shrinking >= 1.5x under halving", [] {
    const Instance& inst = bundled("reflected_ode");
    std::string note;
    for (PhiKind phi : {PhiKind::Square, PhiKind::PositiveSquare}) {
      const ItoReport coarse =
          check_ito_residual(inst.spec, inst.disc, instance_noise(inst), phi);
      Discretization fine = inst.disc;
      fine.nt *= 2;
      fine.nx = 2 * inst.disc.nx + 1;
      const NoisePath fine_noise =
          make_noise(inst.seed, fine.nt, inst.spec.d1, fine.dt(inst.spec.T));
      const ItoReport refined = check_ito_residual(inst.spec, fine, fine_noise, phi);
      if (!coarse.pass)
        return "FAIL " + phi_name(phi) + ": residual " + fmt(coarse.rel_residual);
      if (refined.rel_residual * 1.5 > coarse.rel_residual + 1e-12)
        return "FAIL " + phi_name(phi) + ": " + fmt(coarse.rel_residual) + " -> " +
               fmt(refined.rel_residual);
      note += phi_name(phi) + " " + fmt(coarse.rel_residual) + " -> " +
              fmt(refined.rel_residual) + "; ";
    }
    return note;
  });

  // -------------------------------------------------------------------------
  h.criterion(11, "manifest replay reproduces byte-identical CSVs", [] {
    const fs::path root = fs::temp_directory_path() / "dospde_acceptance_replay";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string cfg = std::string(DOSPDE_CONFIG_DIR) + "/noisy_reflected.ini";

    struct Case {
      std::string name;
      std::string args;
      std::vector<std::string> files;
    };
    const std::vector<Case> cases = {
        {"solve", "solve --config " + cfg, {"u.csv", "nu_plus.csv", "nu_minus.csv", "diagnostics.csv"}},
        {"sweep", "sweep --config " + cfg + " --levels 1,4,16,64", {"sweep.csv"}},
        {"picard", "picard --config " + std::string(DOSPDE_CONFIG_DIR) + "/exp_decay.ini",
         {"trace.csv", "u.csv"}},
    };
    for (const auto& c : cases) {
      const fs::path first = root / (c.name + "_a");
      const fs::path second = root / (c.name + "_b");
      if (run_cli(c.args + " --out " + first.string()) != 0)
        return "FAIL " + c.name + " did not run";
      if (run_cli("replay " + (first / "manifest.json").string() + " --out " + second.string()) != 0)
        return "FAIL " + c.name + " replay did not run";
      for (const auto& f : c.files) {
        if (slurp(first / f) != slurp(second / f))
          return "FAIL " + c.name + ": " + f + " differs under replay";
      }
    }

    // Determinism under the parallel Monte Carlo paths: re-running a suite
    // with the concurrent estimators reproduces summary.csv byte for byte.
    const fs::path suite = root / "mc.suite";
    {
      std::ofstream s(suite);
      s << "measure reflected_ode 40000\nenergy bump_energy 40000\n";
    }
    const fs::path va = root / "validate_a";
    const fs::path vb = root / "validate_b";
    if (run_cli("validate --suite " + suite.string() + " --out " + va.string()) != 0)
      return std::string("FAIL validate did not run");
    if (run_cli("replay " + (va / "manifest.json").string() + " --out " + vb.string()) != 0)
      return std::string("FAIL validate replay did not run");
    if (slurp(va / "summary.csv") != slurp(vb / "summary.csv"))
      return std::string("FAIL summary.csv differs under replay");
    return std::string("solve, sweep, picard and parallel validate replay byte-identical");
  });

  if (h.failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", h.failures);
  return 1;
}

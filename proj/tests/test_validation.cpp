#include <doctest.h>

#include <cmath>

#include "dospde/errors.hpp"
#include "dospde/validation.hpp"

using namespace dospde;

namespace {

NoisePath zero_noise(const Discretization& disc, double T, int d1 = 1) {
  NoisePath n;
  n.nt = disc.nt;
  n.d1 = d1;
  n.dt = disc.dt(T);
  n.increments.assign(static_cast<std::size_t>(disc.nt) * d1, 0.0);
  return n;
}

ProblemSpec wide(const char* f, const char* psi) {
  ProblemSpec s;
  s.T = 1.0;
  s.d1 = 1;
  s.f = Expr::parse(f);
  s.g = Expr::parse("0");
  s.h = {Expr::parse("0")};
  s.psi = Expr::parse(psi);
  s.lower = Expr::parse("-100");
  s.upper = Expr::parse("100");
  return s;
}

}  // namespace

TEST_SUITE("validation") {

TEST_CASE("comparison: identical problems pass with zero violation") {
  const Instance& inst = bundled("reflected_ode");
  Discretization disc = inst.disc;
  disc.nx = 60;
  disc.nt = 100;
  const ComparisonReport rep =
      check_comparison(inst.spec, inst.spec, disc, zero_noise(disc, inst.spec.T));
  CHECK(rep.pass);
  CHECK(!rep.conditional);
  CHECK(rep.worst_violation == 0.0);
}

TEST_CASE("comparison: f shift superposes linearly away from the obstacles") {
  const ProblemSpec s1 = wide("0", "0");
  const ProblemSpec s2 = wide("1", "0");
  Discretization disc;
  disc.R = 4.0;
  disc.nx = 60;
  disc.nt = 100;
  const NoisePath noise = zero_noise(disc, s1.T);
  CHECK(check_comparison(s1, s2, disc, noise).pass);

  const GridSolution a = solve(s1, disc, noise, nullptr, SolveMode::projected());
  const GridSolution b = solve(s2, disc, noise, nullptr, SolveMode::projected());
  const double dt = disc.dt(s1.T);
  for (int k = 0; k <= disc.nt; k += 10) {
    const double expect = s1.T - k * dt;
    for (int j = 0; j < disc.nx; j += 7)
      CHECK(b.u.value(k, j) - a.u.value(k, j) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("comparison: terminal shift propagates") {
  const ProblemSpec s1 = wide("0", "0");
  const ProblemSpec s2 = wide("0", "0.1");
  Discretization disc;
  disc.R = 4.0;
  disc.nx = 60;
  disc.nt = 100;
  const ComparisonReport rep = check_comparison(s1, s2, disc, zero_noise(disc, s1.T));
  CHECK(rep.pass);
}

TEST_CASE("comparison: violated precondition is named") {
  const ProblemSpec s1 = wide("0", "0.1");
  const ProblemSpec s2 = wide("0", "0");  // psi1 > psi2
  Discretization disc;
  disc.R = 4.0;
  disc.nx = 30;
  disc.nt = 20;
  CHECK_THROWS_AS((void)check_comparison(s1, s2, disc, zero_noise(disc, s1.T)),
                  PreconditionUnmet);
}

TEST_CASE("comparison: nonlinear pair through the fixed point") {
  ProblemSpec s1 = wide("-y", "0.2");
  s1.lip = {1, 0, 0};
  ProblemSpec s2 = wide("-y + 0.1", "0.3");
  s2.lip = {1, 0, 0};
  Discretization disc;
  disc.R = 4.0;
  disc.nx = 50;
  disc.nt = 120;
  const ComparisonReport rep = check_comparison(s1, s2, disc, zero_noise(disc, s1.T));
  CHECK(rep.pass);
  CHECK(!rep.conditional);
}

TEST_CASE("penalization sweep on the reflected ODE") {
  const Instance& inst = bundled("reflected_ode");
  const std::vector<double> levels = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  const SweepReport rep = check_penalization_sweep(
      inst.spec, inst.disc, zero_noise(inst.disc, inst.spec.T), levels);
  CHECK(rep.monotone_fields);
  CHECK(rep.monotone_excess);
  CHECK(rep.monotone_sup_diff);
  CHECK(rep.pass);
  // Stationary excess of the implicit penalty is 1/n.
  CHECK(rep.final_excess <= 5e-3);
  CHECK(rep.final_excess == doctest::Approx(1.0 / 256.0).epsilon(0.05));
  CHECK(rep.empirical_rate == doctest::Approx(1.0).epsilon(0.15));  // first-order in 1/n
}

TEST_CASE("penalization sweep: inactive obstacles reproduce the free solve at every level") {
  ProblemSpec s = wide("1", "0");
  Discretization disc;
  disc.R = 4.0;
  disc.nx = 40;
  disc.nt = 80;
  const NoisePath noise = zero_noise(disc, s.T);
  const std::vector<double> levels = {1, 8, 64};
  const SweepReport rep = check_penalization_sweep(s, disc, noise, levels);
  CHECK(rep.pass);
  for (const auto& row : rep.rows) {
    CHECK(row.max_upper_excess == 0.0);
    CHECK(row.mass_kp == 0.0);
    CHECK(row.mass_km == 0.0);
    CHECK(row.sup_diff_to_projected == 0.0);
  }
}

TEST_CASE("penalty level zero equals the lower-obstacle-only solve") {
  const Instance& inst = bundled("reflected_ode_lower");
  Discretization disc = inst.disc;
  disc.nx = 60;
  disc.nt = 100;
  const NoisePath noise = zero_noise(disc, inst.spec.T);
  const GridSolution pen = solve(inst.spec, disc, noise, nullptr,
                                 SolveMode::penalized(0.0, PenaltyKind::UpperOnly));
  ProblemSpec lower_only = inst.spec;
  lower_only.upper = Expr::parse("1e18");
  const GridSolution ref = solve(lower_only, disc, noise, nullptr, SolveMode::projected());
  for (int k = 0; k <= disc.nt; ++k)
    for (int j = 0; j < disc.nx; ++j) CHECK(pen.u.value(k, j) == ref.u.value(k, j));
}

TEST_CASE("ito residual: all-zero data gives zero on both sides") {
  ProblemSpec s = wide("0", "0");
  Discretization disc;
  disc.R = 3.0;
  disc.nx = 30;
  disc.nt = 40;
  const ItoReport rep = check_ito_residual(s, disc, zero_noise(disc, s.T), PhiKind::Square);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.rhs == 0.0);
  CHECK(rep.pass);
}

TEST_CASE("ito residual: Phi = x^2 with unit drift is exact") {
  // u = T - t, so the identity collapses to
  // ||u_0||^2 = 2 int (u_s, 1) ds, both sides T^2 * (Nx dx).
  ProblemSpec s = wide("1", "0");
  Discretization disc;
  disc.R = 3.0;
  disc.nx = 30;
  disc.nt = 50;
  const ItoReport rep = check_ito_residual(s, disc, zero_noise(disc, s.T), PhiKind::Square);
  const double expect = s.T * s.T * disc.nx * disc.dx();
  CHECK(rep.lhs == doctest::Approx(expect).epsilon(1e-12));
  CHECK(rep.rel_residual <= 1e-12);
}

TEST_CASE("ito residual: reflected ODE within 5% for both admitted Phi") {
  const Instance& inst = bundled("reflected_ode");
  const NoisePath noise = zero_noise(inst.disc, inst.spec.T);
  for (PhiKind phi : {PhiKind::Square, PhiKind::PositiveSquare}) {
    const ItoReport rep = check_ito_residual(inst.spec, inst.disc, noise, phi);
    CHECK(rep.pass);
    CHECK(rep.rel_residual <= 0.05);
  }
}

TEST_CASE("ito residual: bounded quartic on the reflected ODE") {
  const Instance& inst = bundled("reflected_ode");
  const NoisePath noise = zero_noise(inst.disc, inst.spec.T);
  const ItoReport rep = check_ito_residual(inst.spec, inst.disc, noise, PhiKind::BoundedQuartic);
  CHECK(rep.pass);
  CHECK(rep.rel_residual <= 1e-4);
}

TEST_CASE("ito residual: noisy instance stays within tolerance for Phi = x^2") {
  // With driving noise the residual carries the pathwise fluctuation of the
  // quadratic variation, an O(sqrt(dt)) effect; x^2 keeps a healthy margin.
  const Instance& inst = bundled("noisy_reflected");
  const NoisePath noise =
      make_noise(inst.seed, inst.disc.nt, inst.spec.d1, inst.disc.dt(inst.spec.T));
  const ItoReport rep = check_ito_residual(inst.spec, inst.disc, noise, PhiKind::Square);
  CHECK(rep.pass);
}

TEST_CASE("phi catalog") {
  CHECK(phi_from_name("square") == PhiKind::Square);
  CHECK(phi_from_name("possquare") == PhiKind::PositiveSquare);
  CHECK(phi_from_name("quartic") == PhiKind::BoundedQuartic);
  CHECK_THROWS_AS((void)phi_from_name("cosh"), UnsupportedPhi);
}

TEST_CASE("separability: witness z = T - t separates by 0.1") {
  const Instance& inst = bundled("separability_demo");
  const SeparabilityReport rep =
      check_separability(inst.spec, inst.disc, zero_noise(inst.disc, inst.spec.T));
  CHECK(rep.pass);
  CHECK(rep.kappa_hat == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("separability: trivial and failing witnesses") {
  ProblemSpec s = wide("0", "0");
  s.lower = Expr::parse("-1");
  s.upper = Expr::parse("1");
  SeparabilityWitness w;
  w.f = Expr::parse("0");
  w.g = Expr::parse("0");
  w.h = {Expr::parse("0")};
  w.psi = Expr::parse("0");
  s.witness = w;
  Discretization disc;
  disc.R = 3.0;
  disc.nx = 30;
  disc.nt = 40;
  const NoisePath noise = zero_noise(disc, s.T);

  SeparabilityReport rep = check_separability(s, disc, noise);
  CHECK(rep.pass);
  CHECK(rep.kappa_hat == doctest::Approx(1.0).epsilon(1e-12));

  s.lower = Expr::parse("0.5");  // z = 0 now sits below the lower obstacle
  s.psi = Expr::parse("0.6");    // keep the terminal sandwich itself valid
  rep = check_separability(s, disc, noise);
  CHECK(!rep.pass);
  CHECK(rep.kappa_hat == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("separability without a witness is a precondition failure") {
  const ProblemSpec s = wide("0", "0");
  Discretization disc;
  disc.R = 3.0;
  disc.nx = 30;
  disc.nt = 40;
  CHECK_THROWS_AS((void)check_separability(s, disc, zero_noise(disc, s.T)), PreconditionUnmet);
}

TEST_CASE("declared Lipschitz constants: clamp passes, quadratic fails") {
  const LipschitzSampleBox box{1.0, 2.0, 10.0, 10.0};

  ProblemSpec ok = wide("clamp(y, -1, 1)", "0");
  ok.lip = {1, 0, 0};
  CHECK(check_lipschitz_declared(ok, 20000, 1, box).pass);

  ProblemSpec hvec = wide("0", "0");
  hvec.h = {Expr::parse("0.4*z1")};
  hvec.lip = {0, 0, 0.4};
  CHECK(check_lipschitz_declared(hvec, 20000, 1, box).pass);

  ProblemSpec bad = wide("y*y", "0");
  bad.lip = {1, 0, 0};
  const LipschitzReport rep = check_lipschitz_declared(bad, 20000, 1, box);
  CHECK(!rep.pass);
  REQUIRE(!rep.failures.empty());
  CHECK(rep.failures.front().coefficient == "f");
  // The witness pair must genuinely exceed slope 1.
  const auto& w = rep.failures.front();
  CHECK(std::fabs(w.y * w.y - w.y2 * w.y2) > std::fabs(w.y - w.y2));
}

TEST_CASE("suite: empty list yields an empty, successful summary") {
  const SuiteSummary summary = run_suite({});
  CHECK(summary.results.empty());
  CHECK(summary.all_pass());
}

TEST_CASE("suite: unknown names are config errors") {
  CHECK_THROWS_AS((void)run_suite({{"nonsense", "reflected_ode", ""}}), ConfigError);
  CHECK_THROWS_AS((void)run_suite({{"ito", "no_such_instance", ""}}), ConfigError);
}

TEST_CASE("suite: a non-contractive instance is marked, not thrown") {
  const SuiteSummary summary = run_suite({{"picard", "broken_contraction", ""}});
  REQUIRE(summary.results.size() == 1);
  CHECK(!summary.results[0].pass);
  CHECK(summary.results[0].detail.find("contraction") != std::string::npos);
  CHECK(!summary.all_pass());
}

TEST_CASE("suite: a fast slice of the default checks passes") {
  const SuiteSummary summary = run_suite({
      {"hypotheses", "reflected_ode", ""},
      {"separability", "separability_demo", ""},
      {"lipschitz", "lipschitz_clamp", ""},
  });
  for (const auto& r : summary.results) {
    INFO(r.check, " ", r.instance, " ", r.detail);
    CHECK(r.pass);
  }
}

}  // TEST_SUITE

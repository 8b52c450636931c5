#include "dospde/model.hpp"

#include <algorithm>
#include <cmath>

#include "dospde/errors.hpp"

namespace dospde {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97f4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void require_vars(const Expr& e, const char* role, bool allow_t, bool allow_y) {
  if (!allow_t && e.uses(Var::T))
    throw ConfigError(std::string(role) + " must not reference t");
  if (!allow_y && (e.uses(Var::Y) || e.uses(Var::Z1)))
    throw ConfigError(std::string(role) + " must not reference y or z1");
}

}  // namespace

bool validate_contraction(const LipschitzData& lip) {
  if (lip.C < 0 || lip.alpha < 0 || lip.beta < 0) return false;
  return lip.alpha + 0.5 * lip.beta * lip.beta < 0.5;
}

void ProblemSpec::validate() const {
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (dim != 1) throw ConfigError("only dim = 1 is supported");
  if (d1 < 1) throw ConfigError("d1 must be >= 1");
  if (psi.empty() || f.empty() || g.empty() || lower.empty() || upper.empty())
    throw ConfigError("psi, f, g, L, U must all be set");
  if (static_cast<int>(h.size()) != d1)
    throw ConfigError("h must have exactly d1 components");
  if (lip.C < 0 || lip.alpha < 0 || lip.beta < 0)
    throw ConfigError("Lipschitz constants must be nonnegative");
  require_vars(psi, "psi", /*allow_t=*/false, /*allow_y=*/false);
  require_vars(lower, "L", true, false);
  require_vars(upper, "U", true, false);
  if (witness) {
    if (witness->f.empty() || witness->g.empty() || witness->psi.empty())
      throw ConfigError("separability witness must define f, g, psi");
    if (static_cast<int>(witness->h.size()) != d1)
      throw ConfigError("separability witness h must have d1 components");
    require_vars(witness->f, "witness f", true, false);
    require_vars(witness->g, "witness g", true, false);
    require_vars(witness->psi, "witness psi", false, false);
    for (const auto& hi : witness->h) require_vars(hi, "witness h", true, false);
  }
}

bool ProblemSpec::coefficients_nonlinear() const {
  auto depends = [](const Expr& e) { return e.uses(Var::Y) || e.uses(Var::Z1); };
  if (depends(f) || depends(g)) return true;
  return std::any_of(h.begin(), h.end(), depends);
}

void Discretization::validate() const {
  if (!(R > 0.0)) throw ConfigError("R must be positive");
  if (nx < 3) throw ConfigError("Nx must be >= 3");
  if (nt < 1) throw ConfigError("Nt must be >= 1");
  if (theta < 0.0 || theta > 1.0) throw ConfigError("theta must lie in [0, 1]");
}

std::vector<double> Discretization::nodes() const {
  std::vector<double> xs(nx);
  for (int j = 0; j < nx; ++j) xs[j] = node(j);
  return xs;
}

// ---------------------------------------------------------------------------
// Noise

GaussianRng::GaussianRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

double GaussianRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

NoisePath make_noise(std::uint64_t seed, int nt, int d1, double dt) {
  if (nt < 1 || d1 < 1) throw ConfigError("make_noise: Nt and d1 must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("make_noise: dt must be positive");
  NoisePath path;
  path.seed = seed;
  path.nt = nt;
  path.d1 = d1;
  path.dt = dt;
  path.increments.resize(static_cast<std::size_t>(nt) * d1);
  GaussianRng rng(seed);
  const double sd = std::sqrt(dt);
  for (double& v : path.increments) v = sd * rng.normal();
  return path;
}

// ---------------------------------------------------------------------------
// Fields

FieldSeries::FieldSeries(int nt, int nx)
    : nt_(nt),
      nx_(nx),
      values_(static_cast<std::size_t>(nt + 1) * nx, 0.0),
      grad_(static_cast<std::size_t>(nt + 1) * nx, 0.0) {}

void central_gradient(std::span<const double> u, double dx, std::span<double> out) {
  const std::size_t n = u.size();
  if (n == 0) return;
  if (n == 1) {
    out[0] = 0.0;
    return;
  }
  out[0] = (u[1] - u[0]) / dx;
  for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (u[j + 1] - u[j - 1]) / (2.0 * dx);
  out[n - 1] = (u[n - 1] - u[n - 2]) / dx;
}

void FieldSeries::refresh_gradient(int k, double dx) { central_gradient(slice(k), dx, grad_slice(k)); }

void FieldSeries::refresh_gradient_all(double dx) {
  for (int k = 0; k <= nt_; ++k) refresh_gradient(k, dx);
}

FieldSeries FieldSeries::difference(const FieldSeries& a, const FieldSeries& b) {
  FieldSeries d(a.nt_, a.nx_);
  for (std::size_t i = 0; i < d.values_.size(); ++i) {
    d.values_[i] = a.values_[i] - b.values_[i];
    d.grad_[i] = a.grad_[i] - b.grad_[i];
  }
  return d;
}

DiscreteMeasure::DiscreteMeasure(int nt, int nx)
    : nt_(nt), nx_(nx), mass_(static_cast<std::size_t>(nt) * nx, 0.0) {}

double DiscreteMeasure::total_mass() const {
  double s = 0.0;
  for (double m : mass_) s += m;
  return s;
}

// ---------------------------------------------------------------------------
// Hypotheses

HypothesisReport check_hypotheses(const ProblemSpec& spec, const Discretization& disc) {
  spec.validate();
  disc.validate();

  HypothesisReport report;
  const std::vector<double> xs = disc.nodes();
  const double dt = disc.dt(spec.T);

  std::vector<double> lo(disc.nx), up(disc.nx), lo_prev(disc.nx), up_prev(disc.nx), psi(disc.nx);

  HypothesisViolation order{"obstacle-order", -1, -1, 0, 0, 0};
  double max_jump = 0.0;
  double obstacle_scale = 0.0;

  for (int k = 0; k <= disc.nt; ++k) {
    const double t = k * dt;
    spec.lower.eval_slice(t, xs, {}, {}, lo);
    spec.upper.eval_slice(t, xs, {}, {}, up);
    for (int j = 0; j < disc.nx; ++j) {
      obstacle_scale = std::max({obstacle_scale, std::fabs(lo[j]), std::fabs(up[j])});
      const double gap = lo[j] - up[j];
      if (gap > order.magnitude) order = {"obstacle-order", k, j, t, xs[j], gap};
      if (k > 0) {
        max_jump = std::max(max_jump, std::fabs(lo[j] - lo_prev[j]));
        max_jump = std::max(max_jump, std::fabs(up[j] - up_prev[j]));
      }
    }
    std::swap(lo, lo_prev);
    std::swap(up, up_prev);
  }
  if (order.magnitude > 0.0) report.violations.push_back(order);

  // Terminal sandwich lower(T) <= psi <= upper(T). lo_prev/up_prev hold the
  // terminal slice after the loop.
  spec.psi.eval_slice(spec.T, xs, {}, {}, psi);
  HypothesisViolation sandwich{"terminal-sandwich", -1, -1, 0, 0, 0};
  for (int j = 0; j < disc.nx; ++j) {
    const double v = std::max(lo_prev[j] - psi[j], psi[j] - up_prev[j]);
    if (v > sandwich.magnitude) sandwich = {"terminal-sandwich", disc.nt, j, spec.T, xs[j], v};
  }
  if (sandwich.magnitude > 0.0) report.violations.push_back(sandwich);

  if (!validate_contraction(spec.lip)) {
    const double excess = spec.lip.alpha + 0.5 * spec.lip.beta * spec.lip.beta - 0.5;
    report.violations.push_back({"contraction", -1, -1, 0, 0, excess});
  }

  // Continuity of t -> obstacle is only sampled at grid nodes; a large
  // slice-to-slice jump is reported as a warning, not a violation.
  if (max_jump > 0.1 * (1.0 + obstacle_scale)) {
    report.warnings.push_back("obstacle jumps by " + std::to_string(max_jump) +
                              " between adjacent time slices; possible discontinuity in t");
  }

  return report;
}

}  // namespace dospde

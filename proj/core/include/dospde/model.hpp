#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dospde/expr.hpp"

namespace dospde {

// ---------------------------------------------------------------------------
// Problem data

/// Lipschitz constants declared for the coefficient triple (f, g, h):
/// C bounds the y-sensitivity of all three and the z-sensitivity of f,
/// alpha the z-sensitivity of g, beta the z-sensitivity of h.
struct LipschitzData {
  double C = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Strict admissibility: alpha + beta^2/2 < 1/2.
bool validate_contraction(const LipschitzData& lip);

/// Data of the auxiliary linear equation whose solution must separate the
/// obstacles (z stays above the lower and below the upper one).
struct SeparabilityWitness {
  Expr f;
  Expr g;
  std::vector<Expr> h;
  Expr psi;
};

/// Full two-obstacle problem. Expressions are over (t, x, y, z1); psi over x
/// only, obstacles over (t, x) only. Spatial dimension is fixed to 1 in this
/// version; the dim field is kept for format stability.
struct ProblemSpec {
  double T = 1.0;
  int dim = 1;
  int d1 = 1;
  Expr psi;
  Expr f;
  Expr g;
  std::vector<Expr> h;  // one expression per driving-noise component
  Expr lower;
  Expr upper;
  LipschitzData lip;
  std::optional<SeparabilityWitness> witness;

  /// Structural checks (sizes, variable roles, T > 0, d1 >= 1).
  /// Throws ConfigError.
  void validate() const;

  /// True if any of f, g, h references y or z1.
  bool coefficients_nonlinear() const;
};

/// Uniform space-time grid on D = [-R, R]: Nx interior nodes, Nt time steps,
/// theta-implicit heat step. dx = 2R/(Nx+1), node j at -R + (j+1) dx.
struct Discretization {
  double R = 1.0;
  int nx = 3;
  int nt = 1;
  double theta = 1.0;

  void validate() const;  // throws ConfigError

  double dx() const { return 2.0 * R / (nx + 1); }
  double dt(double T) const { return T / nt; }
  double node(int j) const { return -R + (j + 1) * dx(); }
  std::vector<double> nodes() const;
};

// ---------------------------------------------------------------------------
// Noise

/// Deterministic standard-normal stream: splitmix64-dispersed seed feeding a
/// Mersenne twister, Box-Muller transform. Bit-reproducible for a fixed
/// binary; independent streams are obtained from distinct seeds.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed);

  double normal();                 // N(0, 1)
  double uniform();                // [0, 1)
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Sub-seed for an indexed parallel stream: seed XOR path-index (the counter
/// scheme used everywhere randomness fans out, so results are independent of
/// scheduling order).
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

/// Sampled increments of the d1-dimensional driving Brownian motion over Nt
/// steps: increment (k, i) ~ N(0, dt) belongs to the interval [t_k, t_{k+1}].
struct NoisePath {
  std::uint64_t seed = 0;
  int nt = 0;
  int d1 = 0;
  double dt = 0.0;
  std::vector<double> increments;  // nt x d1, row-major

  double at(int k, int i) const { return increments[static_cast<std::size_t>(k) * d1 + i]; }
};

/// Pure function of (seed, nt, d1, dt).
NoisePath make_noise(std::uint64_t seed, int nt, int d1, double dt);

// ---------------------------------------------------------------------------
// Fields and measures

/// Space-time array of solution values u ((Nt+1) slices of Nx interior nodes)
/// together with its central-difference gradient (one-sided at the ends).
class FieldSeries {
 public:
  FieldSeries() = default;
  FieldSeries(int nt, int nx);

  int nt() const { return nt_; }
  int nx() const { return nx_; }

  std::span<double> slice(int k) { return {values_.data() + idx(k), static_cast<std::size_t>(nx_)}; }
  std::span<const double> slice(int k) const {
    return {values_.data() + idx(k), static_cast<std::size_t>(nx_)};
  }
  std::span<double> grad_slice(int k) { return {grad_.data() + idx(k), static_cast<std::size_t>(nx_)}; }
  std::span<const double> grad_slice(int k) const {
    return {grad_.data() + idx(k), static_cast<std::size_t>(nx_)};
  }

  double value(int k, int j) const { return values_[idx(k) + j]; }
  double grad(int k, int j) const { return grad_[idx(k) + j]; }

  /// Recomputes the gradient of slice k from its values.
  void refresh_gradient(int k, double dx);
  void refresh_gradient_all(double dx);

  /// Nodewise difference a - b (values and gradients).
  static FieldSeries difference(const FieldSeries& a, const FieldSeries& b);

 private:
  std::size_t idx(int k) const { return static_cast<std::size_t>(k) * nx_; }
  int nt_ = 0;
  int nx_ = 0;
  std::vector<double> values_;
  std::vector<double> grad_;
};

/// Central difference of a single slice, one-sided at the ends.
void central_gradient(std::span<const double> u, double dx, std::span<double> out);

/// Nonnegative mass per space-time cell [t_k, t_{k+1}) x [x_j - dx/2, x_j + dx/2).
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(int nt, int nx);

  int nt() const { return nt_; }
  int nx() const { return nx_; }

  double& at(int k, int j) { return mass_[static_cast<std::size_t>(k) * nx_ + j]; }
  double at(int k, int j) const { return mass_[static_cast<std::size_t>(k) * nx_ + j]; }

  double total_mass() const;

 private:
  int nt_ = 0;
  int nx_ = 0;
  std::vector<double> mass_;
};

// ---------------------------------------------------------------------------
// Hypothesis checking

struct HypothesisViolation {
  std::string hypothesis;  // "obstacle-order", "terminal-sandwich", "contraction"
  int k = -1;              // worst grid location (-1 when not grid-local)
  int j = -1;
  double t = 0.0;
  double x = 0.0;
  double magnitude = 0.0;
};

struct HypothesisReport {
  std::vector<HypothesisViolation> violations;
  std::vector<std::string> warnings;

  bool admissible() const { return violations.empty(); }
};

/// Grid-sampled admissibility: lower <= upper at every node, terminal sandwich
/// lower(T) <= psi <= upper(T), and the declared contraction inequality. Each
/// violated hypothesis is reported once, with the worst location and
/// magnitude. Obstacles that jump sharply between adjacent time slices only
/// produce a warning.
HypothesisReport check_hypotheses(const ProblemSpec& spec, const Discretization& disc);

}  // namespace dospde

#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dospde {

/// Variables an expression may reference. z1 is the (scalar, d = 1) gradient slot.
enum class Var { T, X, Y, Z1 };

/// Evaluation environment: one value per variable.
struct EvalEnv {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z1 = 0.0;
};

/// Immutable arithmetic expression over (t, x, y, z1).
///
/// Grammar (left-associative, usual precedence, whitespace insignificant):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | number | ident | ident '(' args ')' | '(' expr ')'
///
/// Builtins: sin, cos, exp, abs, sqrt (unary); min, max (binary);
/// clamp(v, lo, hi); pos(v) = max(v, 0); neg(v) = max(-v, 0).
/// Numbers are decimal with optional exponent.
class Expr {
 public:
  Expr() = default;

  /// Throws ParseError / UnknownIdentifier / ArityError with byte offsets.
  static Expr parse(std::string_view src);

  /// Convenience: a real constant.
  static Expr constant(double v);

  bool empty() const { return root_ == nullptr; }

  /// IEEE double evaluation. Throws EvalError on division by zero, sqrt of a
  /// negative, or any non-finite intermediate result.
  double eval(const EvalEnv& env) const;

  /// Pointwise evaluation over a slice of nodes: out[j] = eval at
  /// (t, xs[j], ys[j], zs[j]). ys/zs may be empty when the expression does not
  /// reference y/z1. EvalError messages are annotated with the node index.
  void eval_slice(double t, std::span<const double> xs, std::span<const double> ys,
                  std::span<const double> zs, std::span<double> out) const;

  /// True if the variable occurs anywhere in the tree.
  bool uses(Var v) const;

  /// Canonical printer; stable across versions and reparses to an equal tree.
  std::string print() const;

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

  struct Node;  // defined in expr.cpp

 private:
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace dospde

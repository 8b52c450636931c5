#include "dospde/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "dospde/errors.hpp"

namespace dospde {

namespace {

enum class Func { Sin, Cos, Exp, Abs, Sqrt, Min, Max, Clamp, Pos, Neg };

struct FuncInfo {
  std::string_view name;
  Func id;
  int arity;
};

constexpr std::array<FuncInfo, 10> kFuncs = {{
    {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},
    {"exp", Func::Exp, 1},
    {"abs", Func::Abs, 1},
    {"sqrt", Func::Sqrt, 1},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
    {"clamp", Func::Clamp, 3},
    {"pos", Func::Pos, 1},
    {"neg", Func::Neg, 1},
}};

const FuncInfo* lookup_func(std::string_view name) {
  for (const auto& f : kFuncs) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::string_view var_name(Var v) {
  switch (v) {
    case Var::T: return "t";
    case Var::X: return "x";
    case Var::Y: return "y";
    case Var::Z1: return "z1";
  }
  return "?";
}

}  // namespace

enum class BinOp { Add, Sub, Mul, Div };

struct Expr::Node {
  enum class Kind { Literal, Variable, Negate, Binary, Call } kind;
  double value = 0.0;                              // Literal
  Var var = Var::T;                                // Variable
  BinOp op = BinOp::Add;                           // Binary
  Func func = Func::Sin;                           // Call
  std::vector<std::shared_ptr<const Node>> args;   // Negate/Binary/Call children
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Node = Expr::Node;

NodePtr make_literal(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Literal;
  n->value = v;
  return n;
}

NodePtr make_var(Var v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Variable;
  n->var = v;
  return n;
}

NodePtr make_negate(NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Negate;
  n->args = {std::move(a)};
  return n;
}

NodePtr make_binary(BinOp op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->op = op;
  n->args = {std::move(a), std::move(b)};
  return n;
}

NodePtr make_call(Func f, std::vector<NodePtr> args) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Call;
  n->func = f;
  n->args = std::move(args);
  return n;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser.

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError(pos_, "end of input");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      char c = peek();
      if (c == '+' || c == '-') {
        ++pos_;
        NodePtr rhs = parse_term();
        lhs = make_binary(c == '+' ? BinOp::Add : BinOp::Sub, std::move(lhs), std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      char c = peek();
      if (c == '*' || c == '/') {
        ++pos_;
        NodePtr rhs = parse_factor();
        lhs = make_binary(c == '*' ? BinOp::Mul : BinOp::Div, std::move(lhs), std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_factor() {
    char c = peek();
    if (c == '-') {
      ++pos_;
      return make_negate(parse_factor());
    }
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!consume(')')) throw ParseError(pos_, "')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(pos_, "number, identifier, '-' or '('");
  }

  // Decimal with optional fraction and exponent; no hex, no locale.
  NodePtr parse_number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' was not an exponent, stop the literal before it
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc{} || ptr != src_.data() + pos_) throw ParseError(start, "number");
    return make_literal(v);
  }

  NodePtr parse_ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    std::string name(src_.substr(start, pos_ - start));

    if (peek() == '(') {
      const FuncInfo* f = lookup_func(name);
      if (!f) throw UnknownIdentifier(start, name);
      ++pos_;  // '('
      std::vector<NodePtr> args;
      if (peek() != ')') {
        args.push_back(parse_expr());
        while (consume(',')) args.push_back(parse_expr());
      }
      if (!consume(')')) throw ParseError(pos_, "')' or ','");
      if (static_cast<int>(args.size()) != f->arity)
        throw ArityError(start, name, f->arity, static_cast<int>(args.size()));
      return make_call(f->id, std::move(args));
    }

    if (name == "t") return make_var(Var::T);
    if (name == "x") return make_var(Var::X);
    if (name == "y") return make_var(Var::Y);
    if (name == "z1") return make_var(Var::Z1);
    throw UnknownIdentifier(start, name);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation.

double check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

double eval_node(const Node& n, const EvalEnv& env) {
  switch (n.kind) {
    case Node::Kind::Literal:
      return n.value;
    case Node::Kind::Variable:
      switch (n.var) {
        case Var::T: return env.t;
        case Var::X: return env.x;
        case Var::Y: return env.y;
        case Var::Z1: return env.z1;
      }
      return 0.0;
    case Node::Kind::Negate:
      return -eval_node(*n.args[0], env);
    case Node::Kind::Binary: {
      double a = eval_node(*n.args[0], env);
      double b = eval_node(*n.args[1], env);
      switch (n.op) {
        case BinOp::Add: return check_finite(a + b, "'+'");
        case BinOp::Sub: return check_finite(a - b, "'-'");
        case BinOp::Mul: return check_finite(a * b, "'*'");
        case BinOp::Div:
          if (b == 0.0) throw EvalError("division by zero");
          return check_finite(a / b, "'/'");
      }
      return 0.0;
    }
    case Node::Kind::Call: {
      switch (n.func) {
        case Func::Sin: return std::sin(eval_node(*n.args[0], env));
        case Func::Cos: return std::cos(eval_node(*n.args[0], env));
        case Func::Exp: return check_finite(std::exp(eval_node(*n.args[0], env)), "exp");
        case Func::Abs: return std::fabs(eval_node(*n.args[0], env));
        case Func::Sqrt: {
          double a = eval_node(*n.args[0], env);
          if (a < 0.0) throw EvalError("sqrt of negative");
          return std::sqrt(a);
        }
        case Func::Min: return std::fmin(eval_node(*n.args[0], env), eval_node(*n.args[1], env));
        case Func::Max: return std::fmax(eval_node(*n.args[0], env), eval_node(*n.args[1], env));
        case Func::Clamp: {
          double v = eval_node(*n.args[0], env);
          double lo = eval_node(*n.args[1], env);
          double hi = eval_node(*n.args[2], env);
          return std::fmin(hi, std::fmax(lo, v));
        }
        case Func::Pos: return std::fmax(eval_node(*n.args[0], env), 0.0);
        case Func::Neg: return std::fmax(-eval_node(*n.args[0], env), 0.0);
      }
      return 0.0;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Canonical printer. Parenthesizes only where precedence requires it, so
// print-then-parse reproduces the tree.

int precedence(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Binary: return (n.op == BinOp::Add || n.op == BinOp::Sub) ? 1 : 2;
    case Node::Kind::Negate: return 3;
    default: return 4;
  }
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, int min_prec, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print_node(child, out);
    out += ')';
  } else {
    print_node(child, out);
  }
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Literal: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", n.value);
      out += buf;
      return;
    }
    case Node::Kind::Variable:
      out += var_name(n.var);
      return;
    case Node::Kind::Negate:
      // "-x*y" parses as (-x)*y, so a negated product needs parens: "-(x*y)".
      out += '-';
      print_child(*n.args[0], 4, out);
      return;
    case Node::Kind::Binary: {
      const char* ops = nullptr;
      int prec = precedence(n);
      switch (n.op) {
        case BinOp::Add: ops = " + "; break;
        case BinOp::Sub: ops = " - "; break;
        case BinOp::Mul: ops = "*"; break;
        case BinOp::Div: ops = "/"; break;
      }
      print_child(*n.args[0], prec, out);
      out += ops;
      // Left associativity: the right child needs parens at equal precedence.
      print_child(*n.args[1], prec + 1, out);
      return;
    }
    case Node::Kind::Call: {
      for (const auto& f : kFuncs) {
        if (f.id == n.func) {
          out += f.name;
          break;
        }
      }
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*n.args[i], out);
      }
      out += ')';
      return;
    }
  }
}

bool node_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Node::Kind::Literal: return a.value == b.value;
    case Node::Kind::Variable: return a.var == b.var;
    case Node::Kind::Binary:
      if (a.op != b.op) return false;
      break;
    case Node::Kind::Call:
      if (a.func != b.func) return false;
      break;
    case Node::Kind::Negate:
      break;
  }
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!node_equal(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

bool node_uses(const Node& n, Var v) {
  if (n.kind == Node::Kind::Variable) return n.var == v;
  for (const auto& a : n.args) {
    if (node_uses(*a, v)) return true;
  }
  return false;
}

}  // namespace

Expr Expr::parse(std::string_view src) {
  Parser p(src);
  return Expr(p.run());
}

Expr Expr::constant(double v) { return Expr(make_literal(v)); }

double Expr::eval(const EvalEnv& env) const {
  if (!root_) throw EvalError("empty expression");
  return eval_node(*root_, env);
}

void Expr::eval_slice(double t, std::span<const double> xs, std::span<const double> ys,
                      std::span<const double> zs, std::span<double> out) const {
  if (!root_) throw EvalError("empty expression");
  if (out.size() != xs.size()) throw EvalError("eval_slice: output size mismatch");
  const bool need_y = uses(Var::Y);
  const bool need_z = uses(Var::Z1);
  if (need_y && ys.size() != xs.size()) throw EvalError("eval_slice: y slice missing");
  if (need_z && zs.size() != xs.size()) throw EvalError("eval_slice: z slice missing");
  for (std::size_t j = 0; j < xs.size(); ++j) {
    EvalEnv env;
    env.t = t;
    env.x = xs[j];
    env.y = need_y ? ys[j] : 0.0;
    env.z1 = need_z ? zs[j] : 0.0;
    try {
      out[j] = eval_node(*root_, env);
    } catch (const EvalError& e) {
      throw EvalError(std::string(e.what()) + " at node " + std::to_string(j));
    }
  }
}

bool Expr::uses(Var v) const { return root_ && node_uses(*root_, v); }

std::string Expr::print() const {
  if (!root_) return "";
  std::string out;
  print_node(*root_, out);
  return out;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.root_ == b.root_) return true;
  if (!a.root_ || !b.root_) return false;
  return node_equal(*a.root_, *b.root_);
}

}  // namespace dospde

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pbs {

enum class Op : std::uint8_t {
  Const,
  Var,
  // unary
  Neg,
  Sqrt,
  Exp,
  Ln,
  Sin,
  Cos,
  Arcsin,
  Abs,
  // binary
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

bool is_unary(Op op) noexcept;
bool is_binary(Op op) noexcept;

/// Immutable scalar expression over named variables.
///
/// Nodes are shared, so an Expr is cheap to copy and derived expressions form
/// a DAG rather than a tree. The factories apply constant folding and identity
/// elimination (0+e, 1*e, e^1, ...) but nothing beyond that; two expressions
/// that are mathematically equal need not be structurally equal.
class Expr {
 public:
  /// The constant 0.
  Expr();

  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr unary(Op op, Expr operand);
  static Expr binary(Op op, Expr lhs, Expr rhs);

  Op op() const noexcept;
  double value() const noexcept;          // Const only
  const std::string& name() const noexcept;  // Var only
  const Expr& operand(std::size_t i) const noexcept;

  bool is_constant() const noexcept { return op() == Op::Const; }
  bool is_constant(double v) const noexcept { return is_constant() && value() == v; }
  bool is_variable() const noexcept { return op() == Op::Var; }

  /// Node identity; equal ids imply structural equality.
  const void* id() const noexcept { return node_.get(); }

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);
Expr operator/(const Expr& a, double b);
Expr operator/(double a, const Expr& b);

Expr pow(const Expr& base, const Expr& exponent);
Expr pow(const Expr& base, double exponent);
Expr sqrt(const Expr& e);
Expr exp(const Expr& e);
Expr ln(const Expr& e);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr arcsin(const Expr& e);
Expr abs(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// Infix text accepted back by parse(); doubles are written with 17
/// significant digits so the round trip is exact.
std::string to_string(const Expr& e);

std::set<std::string> free_variables(const Expr& e);
bool depends_on(const Expr& e, std::string_view var);

/// Number of distinct nodes in the DAG.
std::size_t node_count(const Expr& e);

/// Exact symbolic partial derivative.
Expr differentiate(const Expr& e, std::string_view var);

/// Replace variables by expressions. Unlisted variables are kept.
Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& replacements);

/// Flattens top-level sums and differences into signed terms, e.g.
/// a - (b + c) -> {a, -b, -c}. Used to build residual scales.
std::vector<Expr> additive_terms(const Expr& e);

using Bindings = std::map<std::string, double, std::less<>>;

/// One-shot evaluation. Throws UnboundVariable if a free variable is missing
/// and Domain on sqrt/ln/arcsin/pow/division domain violations.
double evaluate(const Expr& e, const Bindings& bindings);

/// A set of expressions compiled into a flat instruction tape over a fixed
/// input ordering. Shared subexpressions are evaluated once per run.
class Program {
 public:
  Program() = default;
  Program(std::vector<Expr> outputs, std::vector<std::string> inputs);

  const std::vector<std::string>& inputs() const noexcept { return inputs_; }
  std::size_t output_count() const noexcept { return outputs_.size(); }

  void run(std::span<const double> in, std::span<double> out) const;
  std::vector<double> operator()(std::span<const double> in) const;
  double scalar(std::span<const double> in) const;  // first output

 private:
  struct Instr {
    Op op;
    std::int32_t a;
    std::int32_t b;
    double c;
  };
  std::vector<std::string> inputs_;
  std::vector<Expr> outputs_;
  std::vector<Instr> tape_;
  std::vector<Expr> sources_;  // node per tape slot, for error messages
  std::vector<std::int32_t> output_slots_;
};

}  // namespace pbs

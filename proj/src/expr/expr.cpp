#include "pbs/expr.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "pbs/error.hpp"

namespace pbs {

struct Expr::Node {
  Op op;
  double value;
  std::string name;
  Expr a;
  Expr b;
};

bool is_unary(Op op) noexcept { return op >= Op::Neg && op <= Op::Abs; }
bool is_binary(Op op) noexcept { return op >= Op::Add && op <= Op::Pow; }

namespace {

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

// Folding only happens when the result is a finite real; anything else is
// left symbolic so that evaluation reports the violation in context.
bool fold_unary(Op op, double a, double& out) {
  switch (op) {
    case Op::Neg: out = -a; break;
    case Op::Sqrt:
      if (a < 0) return false;
      out = std::sqrt(a);
      break;
    case Op::Exp: out = std::exp(a); break;
    case Op::Ln:
      if (a <= 0) return false;
      out = std::log(a);
      break;
    case Op::Sin: out = std::sin(a); break;
    case Op::Cos: out = std::cos(a); break;
    case Op::Arcsin:
      if (a < -1 || a > 1) return false;
      out = std::asin(a);
      break;
    case Op::Abs: out = std::fabs(a); break;
    default: return false;
  }
  return std::isfinite(out);
}

bool fold_binary(Op op, double a, double b, double& out) {
  switch (op) {
    case Op::Add: out = a + b; break;
    case Op::Sub: out = a - b; break;
    case Op::Mul: out = a * b; break;
    case Op::Div:
      if (b == 0) return false;
      out = a / b;
      break;
    case Op::Pow:
      if (a < 0 && !is_integer(b)) return false;
      if (a == 0 && b < 0) return false;
      out = std::pow(a, b);
      break;
    default: return false;
  }
  return std::isfinite(out);
}

}  // namespace

Expr::Expr() {
  static const std::shared_ptr<const Node> zero =
      std::make_shared<const Node>(Node{Op::Const, 0.0, {}, Expr(nullptr), Expr(nullptr)});
  node_ = zero;
}

Expr Expr::constant(double value) {
  return Expr(std::make_shared<const Node>(Node{Op::Const, value, {}, Expr(nullptr), Expr(nullptr)}));
}

Expr Expr::variable(std::string name) {
  return Expr(
      std::make_shared<const Node>(Node{Op::Var, 0.0, std::move(name), Expr(nullptr), Expr(nullptr)}));
}

Expr Expr::unary(Op op, Expr operand) {
  if (operand.is_constant()) {
    double folded = 0;
    if (fold_unary(op, operand.value(), folded)) return constant(folded);
  }
  if (op == Op::Neg && operand.op() == Op::Neg) return operand.operand(0);
  return Expr(std::make_shared<const Node>(Node{op, 0.0, {}, std::move(operand), Expr(nullptr)}));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (lhs.is_constant() && rhs.is_constant()) {
    double folded = 0;
    if (fold_binary(op, lhs.value(), rhs.value(), folded)) return constant(folded);
  }
  switch (op) {
    case Op::Add:
      if (lhs.is_constant(0)) return rhs;
      if (rhs.is_constant(0)) return lhs;
      break;
    case Op::Sub:
      if (rhs.is_constant(0)) return lhs;
      if (lhs.is_constant(0)) return unary(Op::Neg, std::move(rhs));
      break;
    case Op::Mul:
      if (lhs.is_constant(0) || rhs.is_constant(0)) return constant(0);
      if (lhs.is_constant(1)) return rhs;
      if (rhs.is_constant(1)) return lhs;
      if (lhs.is_constant(-1)) return unary(Op::Neg, std::move(rhs));
      if (rhs.is_constant(-1)) return unary(Op::Neg, std::move(lhs));
      break;
    case Op::Div:
      if (rhs.is_constant(1)) return lhs;
      if (lhs.is_constant(0) && !rhs.is_constant(0)) return constant(0);
      break;
    case Op::Pow:
      if (rhs.is_constant(1)) return lhs;
      if (rhs.is_constant(0)) return constant(1);
      break;
    default: break;
  }
  return Expr(std::make_shared<const Node>(Node{op, 0.0, {}, std::move(lhs), std::move(rhs)}));
}

Op Expr::op() const noexcept { return node_->op; }
double Expr::value() const noexcept { return node_->value; }
const std::string& Expr::name() const noexcept { return node_->name; }
const Expr& Expr::operand(std::size_t i) const noexcept { return i == 0 ? node_->a : node_->b; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }
Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }

Expr pow(const Expr& base, const Expr& exponent) { return Expr::binary(Op::Pow, base, exponent); }
Expr pow(const Expr& base, double exponent) { return pow(base, Expr::constant(exponent)); }
Expr sqrt(const Expr& e) { return Expr::unary(Op::Sqrt, e); }
Expr exp(const Expr& e) { return Expr::unary(Op::Exp, e); }
Expr ln(const Expr& e) { return Expr::unary(Op::Ln, e); }
Expr sin(const Expr& e) { return Expr::unary(Op::Sin, e); }
Expr cos(const Expr& e) { return Expr::unary(Op::Cos, e); }
Expr arcsin(const Expr& e) { return Expr::unary(Op::Arcsin, e); }
Expr abs(const Expr& e) { return Expr::unary(Op::Abs, e); }

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Const: return a.value() == b.value();
    case Op::Var: return a.name() == b.name();
    default: break;
  }
  if (!structurally_equal(a.operand(0), b.operand(0))) return false;
  return !is_binary(a.op()) || structurally_equal(a.operand(1), b.operand(1));
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string_view function_name(Op op) {
  switch (op) {
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Arcsin: return "arcsin";
    case Op::Abs: return "abs";
    default: return "";
  }
}

// Binding strength: sums 1, products 2, negation 3, powers 4, atoms 5.
int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return e.value() < 0 || std::signbit(e.value()) ? 3 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print(e, out);
  if (parens) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Const: out += format_number(e.value()); return;
    case Op::Var: out += e.name(); return;
    case Op::Neg:
      out += '-';
      print_wrapped(e.operand(0), precedence(e.operand(0)) < 4, out);
      return;
    case Op::Add:
    case Op::Sub:
      print(e.operand(0), out);
      out += e.op() == Op::Add ? " + " : " - ";
      print_wrapped(e.operand(1), precedence(e.operand(1)) <= 1 || precedence(e.operand(1)) == 3, out);
      return;
    case Op::Mul:
    case Op::Div:
      print_wrapped(e.operand(0), precedence(e.operand(0)) < 2, out);
      out += e.op() == Op::Mul ? "*" : "/";
      print_wrapped(e.operand(1), precedence(e.operand(1)) <= 3, out);
      return;
    case Op::Pow:
      print_wrapped(e.operand(0), precedence(e.operand(0)) < 5, out);
      out += '^';
      print_wrapped(e.operand(1), precedence(e.operand(1)) < 5, out);
      return;
    default:
      out += function_name(e.op());
      out += '(';
      print(e.operand(0), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Traversals

namespace {

void collect_variables(const Expr& e, std::set<std::string>& out, std::unordered_set<const void*>& seen) {
  if (!seen.insert(e.id()).second) return;
  if (e.is_variable()) {
    out.insert(e.name());
    return;
  }
  if (e.is_constant()) return;
  collect_variables(e.operand(0), out, seen);
  if (is_binary(e.op())) collect_variables(e.operand(1), out, seen);
}

}  // namespace

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out;
  std::unordered_set<const void*> seen;
  collect_variables(e, out, seen);
  return out;
}

bool depends_on(const Expr& e, std::string_view var) {
  const auto vars = free_variables(e);
  return vars.find(std::string(var)) != vars.end();
}

std::size_t node_count(const Expr& e) {
  std::unordered_set<const void*> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& n) {
    if (!seen.insert(n.id()).second) return;
    if (n.is_constant() || n.is_variable()) return;
    walk(n.operand(0));
    if (is_binary(n.op())) walk(n.operand(1));
  };
  walk(e);
  return seen.size();
}

namespace {

class Differentiator {
 public:
  explicit Differentiator(std::string_view var) : var_(var) {}

  Expr operator()(const Expr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr d = compute(e);
    memo_.emplace(e.id(), d);
    return d;
  }

 private:
  Expr compute(const Expr& e) {
    switch (e.op()) {
      case Op::Const: return Expr::constant(0);
      case Op::Var: return Expr::constant(e.name() == var_ ? 1.0 : 0.0);
      default: break;
    }
    const Expr& a = e.operand(0);
    const Expr da = (*this)(a);
    switch (e.op()) {
      case Op::Neg: return -da;
      case Op::Sqrt: return da / (2.0 * e);
      case Op::Exp: return e * da;
      case Op::Ln: return da / a;
      case Op::Sin: return cos(a) * da;
      case Op::Cos: return -(sin(a) * da);
      case Op::Arcsin: return da / sqrt(1.0 - a * a);
      case Op::Abs: return da * (a / e);
      default: break;
    }
    const Expr& b = e.operand(1);
    const Expr db = (*this)(b);
    switch (e.op()) {
      case Op::Add: return da + db;
      case Op::Sub: return da - db;
      case Op::Mul: return da * b + a * db;
      case Op::Div: return (da * b - a * db) / (b * b);
      case Op::Pow:
        if (b.is_constant()) {
          if (da.is_constant(0)) return Expr::constant(0);
          return b * pow(a, b.value() - 1.0) * da;
        }
        return e * (db * ln(a) + b * da / a);
      default: break;
    }
    return Expr::constant(0);
  }

  std::string_view var_;
  std::unordered_map<const void*, Expr> memo_;
};

class Substituter {
 public:
  explicit Substituter(const std::map<std::string, Expr, std::less<>>& r) : r_(r) {}

  Expr operator()(const Expr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr out = compute(e);
    memo_.emplace(e.id(), out);
    return out;
  }

 private:
  Expr compute(const Expr& e) {
    if (e.is_constant()) return e;
    if (e.is_variable()) {
      auto it = r_.find(e.name());
      return it == r_.end() ? e : it->second;
    }
    Expr a = (*this)(e.operand(0));
    if (is_unary(e.op())) {
      if (a.id() == e.operand(0).id()) return e;
      return Expr::unary(e.op(), a);
    }
    Expr b = (*this)(e.operand(1));
    if (a.id() == e.operand(0).id() && b.id() == e.operand(1).id()) return e;
    return Expr::binary(e.op(), a, b);
  }

  const std::map<std::string, Expr, std::less<>>& r_;
  std::unordered_map<const void*, Expr> memo_;
};

}  // namespace

Expr differentiate(const Expr& e, std::string_view var) {
  Differentiator d(var);
  return d(e);
}

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& replacements) {
  if (replacements.empty()) return e;
  Substituter s(replacements);
  return s(e);
}

std::vector<Expr> additive_terms(const Expr& e) {
  std::vector<Expr> out;
  std::function<void(const Expr&, bool)> walk = [&](const Expr& n, bool negate) {
    switch (n.op()) {
      case Op::Add:
        walk(n.operand(0), negate);
        walk(n.operand(1), negate);
        return;
      case Op::Sub:
        walk(n.operand(0), negate);
        walk(n.operand(1), !negate);
        return;
      case Op::Neg: walk(n.operand(0), !negate); return;
      default: out.push_back(negate ? -n : n);
    }
  };
  walk(e, false);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

Program::Program(std::vector<Expr> outputs, std::vector<std::string> inputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  std::unordered_map<std::string_view, std::int32_t> input_index;
  for (std::size_t i = 0; i < inputs_.size(); ++i) input_index.emplace(inputs_[i], static_cast<std::int32_t>(i));

  std::unordered_map<const void*, std::int32_t> slot_of;
  std::function<std::int32_t(const Expr&)> emit = [&](const Expr& e) -> std::int32_t {
    if (auto it = slot_of.find(e.id()); it != slot_of.end()) return it->second;
    Instr ins{e.op(), -1, -1, 0.0};
    switch (e.op()) {
      case Op::Const: ins.c = e.value(); break;
      case Op::Var: {
        auto it = input_index.find(e.name());
        if (it == input_index.end()) throw Error(ErrorCode::UnboundVariable, "unbound variable '" + e.name() + "'");
        ins.a = it->second;
        break;
      }
      default:
        ins.a = emit(e.operand(0));
        if (is_binary(e.op())) ins.b = emit(e.operand(1));
        break;
    }
    const auto slot = static_cast<std::int32_t>(tape_.size());
    tape_.push_back(ins);
    sources_.push_back(e);
    slot_of.emplace(e.id(), slot);
    return slot;
  };
  for (const Expr& out : outputs_) output_slots_.push_back(emit(out));
}

namespace {

[[noreturn]] void domain_failure(const Expr& where, const std::string& what) {
  std::string text = to_string(where);
  if (text.size() > 160) text = text.substr(0, 157) + "...";
  throw Error(ErrorCode::Domain, "domain violation (" + what + ") in " + text);
}

}  // namespace

void Program::run(std::span<const double> in, std::span<double> out) const {
  if (in.size() != inputs_.size()) throw Error(ErrorCode::InvalidArgument, "program input size mismatch");
  thread_local std::vector<double> regs;
  regs.resize(tape_.size());
  for (std::size_t i = 0; i < tape_.size(); ++i) {
    const Instr& ins = tape_[i];
    const double a = ins.a >= 0 && ins.op != Op::Var ? regs[ins.a] : 0.0;
    const double b = ins.b >= 0 ? regs[ins.b] : 0.0;
    double r = 0;
    switch (ins.op) {
      case Op::Const: r = ins.c; break;
      case Op::Var: r = in[ins.a]; break;
      case Op::Neg: r = -a; break;
      case Op::Sqrt:
        if (a < 0) domain_failure(sources_[i], "sqrt of negative");
        r = std::sqrt(a);
        break;
      case Op::Exp: r = std::exp(a); break;
      case Op::Ln:
        if (a <= 0) domain_failure(sources_[i], "ln of non-positive");
        r = std::log(a);
        break;
      case Op::Sin: r = std::sin(a); break;
      case Op::Cos: r = std::cos(a); break;
      case Op::Arcsin:
        if (a < -1 || a > 1) domain_failure(sources_[i], "arcsin argument outside [-1,1]");
        r = std::asin(a);
        break;
      case Op::Abs: r = std::fabs(a); break;
      case Op::Add: r = a + b; break;
      case Op::Sub: r = a - b; break;
      case Op::Mul: r = a * b; break;
      case Op::Div:
        if (b == 0) domain_failure(sources_[i], "division by zero");
        r = a / b;
        break;
      case Op::Pow:
        if (a < 0 && !is_integer(b)) domain_failure(sources_[i], "non-integer power of negative base");
        if (a == 0 && b < 0) domain_failure(sources_[i], "negative power of zero");
        r = b == 2.0 ? a * a : std::pow(a, b);
        break;
    }
    if (!std::isfinite(r)) domain_failure(sources_[i], "non-finite result");
    regs[i] = r;
  }
  for (std::size_t k = 0; k < output_slots_.size() && k < out.size(); ++k) out[k] = regs[output_slots_[k]];
}

std::vector<double> Program::operator()(std::span<const double> in) const {
  std::vector<double> out(outputs_.size());
  run(in, out);
  return out;
}

double Program::scalar(std::span<const double> in) const {
  double out = 0;
  run(in, std::span<double>(&out, 1));
  return out;
}

double evaluate(const Expr& e, const Bindings& bindings) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& v : free_variables(e)) {
    auto it = bindings.find(v);
    if (it == bindings.end()) throw Error(ErrorCode::UnboundVariable, "unbound variable '" + v + "'");
    names.push_back(v);
    values.push_back(it->second);
  }
  Program p({e}, std::move(names));
  return p.scalar(values);
}

}  // namespace pbs

#include "pbs/jet.hpp"

#include <map>
#include <numeric>

#include "pbs/error.hpp"

namespace pbs {

int order(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

JetConvention JetConvention::one_plus_one(int max_order) {
  JetConvention c;
  c.one_plus_one_ = true;
  c.n_ = 1;
  c.max_order_ = max_order;
  c.coords_ = {"t", "x"};
  return c;
}

JetConvention JetConvention::n_plus_one(int n, int max_order) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "spatial dimension must be >= 1");
  JetConvention c;
  c.one_plus_one_ = false;
  c.n_ = n;
  c.max_order_ = max_order;
  for (int i = 0; i <= n; ++i) c.coords_.push_back("x" + std::to_string(i));
  return c;
}

JetConvention JetConvention::with_max_order(int max_order) const {
  JetConvention c = *this;
  c.max_order_ = max_order;
  return c;
}

std::optional<std::size_t> JetConvention::axis_of(std::string_view coordinate) const {
  for (std::size_t i = 0; i < coords_.size(); ++i)
    if (coords_[i] == coordinate) return i;
  return std::nullopt;
}

std::optional<MultiIndex> JetConvention::classify(std::string_view name) const {
  if (name == "u") return MultiIndex(axis_count(), 0);
  if (name.size() < 3 || name.substr(0, 2) != "u_") return std::nullopt;
  std::string_view suffix = name.substr(2);
  MultiIndex alpha(axis_count(), 0);
  if (one_plus_one_) {
    for (char c : suffix) {
      if (c == 't') ++alpha[0];
      else if (c == 'x') ++alpha[1];
      else return std::nullopt;
    }
    return alpha;
  }
  std::size_t i = 0;
  while (i < suffix.size()) {
    if (suffix[i] != 'x') return std::nullopt;
    std::size_t j = i + 1;
    int axis = 0;
    while (j < suffix.size() && suffix[j] >= '0' && suffix[j] <= '9') axis = axis * 10 + (suffix[j++] - '0');
    if (j == i + 1 || axis > n_) return std::nullopt;
    ++alpha[static_cast<std::size_t>(axis)];
    i = j;
  }
  return alpha;
}

std::string JetConvention::jet_name(const MultiIndex& alpha) const {
  if (order(alpha) == 0) return "u";
  std::string out = "u_";
  if (one_plus_one_) {
    out.append(static_cast<std::size_t>(alpha[1]), 'x');
    out.append(static_cast<std::size_t>(alpha[0]), 't');
    return out;
  }
  for (std::size_t axis = 0; axis < alpha.size(); ++axis)
    for (int k = 0; k < alpha[axis]; ++k) out += "x" + std::to_string(axis);
  return out;
}

std::string JetConvention::first_order_name(std::size_t axis) const {
  MultiIndex alpha(axis_count(), 0);
  alpha.at(axis) = 1;
  return jet_name(alpha);
}

std::vector<Expr> total_derivative_terms(const Expr& e, const JetConvention& conv, std::size_t axis) {
  if (axis >= conv.axis_count()) throw Error(ErrorCode::InvalidArgument, "axis out of range");
  std::vector<Expr> terms;
  for (const auto& v : free_variables(e)) {
    if (v == conv.coordinate(axis)) {
      terms.push_back(differentiate(e, v));
      continue;
    }
    auto alpha = conv.classify(v);
    if (!alpha) continue;
    MultiIndex next = *alpha;
    ++next[axis];
    if (order(next) > conv.max_order())
      throw Error(ErrorCode::JetOrderOverflow,
                  "total derivative of '" + v + "' exceeds jet order cap " + std::to_string(conv.max_order()));
    Expr partial = differentiate(e, v);
    if (partial.is_constant(0)) continue;
    terms.push_back(partial * Expr::variable(conv.jet_name(next)));
  }
  return terms;
}

Expr total_derivative(const Expr& e, const JetConvention& conv, std::size_t axis) {
  Expr out = Expr::constant(0);
  for (const auto& t : total_derivative_terms(e, conv, axis)) out = out + t;
  return out;
}

Expr total_x_derivative(const Expr& e, const JetConvention& conv) { return total_derivative(e, conv, conv.x_axis()); }

int jet_order(const Expr& e, const JetConvention& conv) {
  int best = 0;
  for (const auto& v : free_variables(e))
    if (auto alpha = conv.classify(v)) best = std::max(best, order(*alpha));
  return best;
}

bool uses_axis(const Expr& e, const JetConvention& conv, std::size_t axis) {
  for (const auto& v : free_variables(e))
    if (auto alpha = conv.classify(v); alpha && (*alpha)[axis] > 0) return true;
  return false;
}

Expr compose_jets(const Expr& jet_expr, const Expr& field, const JetConvention& conv) {
  std::map<MultiIndex, Expr> derivs;
  derivs.emplace(MultiIndex(conv.axis_count(), 0), field);
  // Builds d^alpha field by peeling one derivative at a time; lower orders
  // are shared between requests.
  auto derivative = [&](auto&& self, const MultiIndex& alpha) -> Expr {
    if (auto it = derivs.find(alpha); it != derivs.end()) return it->second;
    MultiIndex lower = alpha;
    std::size_t axis = 0;
    while (lower[axis] == 0) ++axis;
    --lower[axis];
    Expr d = differentiate(self(self, lower), conv.coordinate(axis));
    derivs.emplace(alpha, d);
    return d;
  };
  std::map<std::string, Expr, std::less<>> repl;
  for (const auto& v : free_variables(jet_expr))
    if (auto alpha = conv.classify(v)) repl.emplace(v, derivative(derivative, *alpha));
  return substitute(jet_expr, repl);
}

}  // namespace pbs

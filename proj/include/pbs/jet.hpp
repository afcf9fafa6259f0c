#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbs/expr.hpp"

namespace pbs {

/// Derivative counts per coordinate axis; axis 0 is time.
using MultiIndex = std::vector<int>;

int order(const MultiIndex& alpha);

/// Naming of coordinates and jet variables.
///
/// 1+1 convention: coordinates t, x; jets u, u_t, u_x, u_xx, u_xt, u_tt, ...
/// (canonical spelling puts x before t, but any order of the suffix letters
/// is recognised). n+1 convention: coordinates x0..xn; jets u, u_x0, u_x1,
/// u_x0x1, ... with indices ascending.
class JetConvention {
 public:
  static JetConvention one_plus_one(int max_order = 4);
  static JetConvention n_plus_one(int n, int max_order = 4);

  bool is_one_plus_one() const noexcept { return one_plus_one_; }
  int spatial_dims() const noexcept { return n_; }
  std::size_t axis_count() const noexcept { return static_cast<std::size_t>(n_) + 1; }
  int max_order() const noexcept { return max_order_; }
  JetConvention with_max_order(int max_order) const;

  const std::vector<std::string>& coordinates() const noexcept { return coords_; }
  const std::string& coordinate(std::size_t axis) const { return coords_.at(axis); }
  std::optional<std::size_t> axis_of(std::string_view coordinate) const;

  /// Multi-index of a jet variable name ("u" maps to all zeros), or nullopt
  /// for names that are not jet variables of this convention.
  std::optional<MultiIndex> classify(std::string_view name) const;
  std::string jet_name(const MultiIndex& alpha) const;
  std::string first_order_name(std::size_t axis) const;

  /// Name of the spatial axis used for D_x in the 1+1 recursion machinery.
  std::size_t x_axis() const noexcept { return 1; }

 private:
  bool one_plus_one_ = true;
  int n_ = 1;
  int max_order_ = 4;
  std::vector<std::string> coords_;
};

/// Total derivative along one axis: sum over jet variables of
/// (d e / d jet) * successor(jet) plus the explicit coordinate derivative.
/// Throws JetOrderOverflow when a successor would exceed the configured
/// maximum order.
Expr total_derivative(const Expr& e, const JetConvention& conv, std::size_t axis);

/// The individual chain-rule terms whose sum is total_derivative(). Residual
/// scales are built from these.
std::vector<Expr> total_derivative_terms(const Expr& e, const JetConvention& conv, std::size_t axis);

/// D_x in the 1+1 convention (axis 1 of either convention).
Expr total_x_derivative(const Expr& e, const JetConvention& conv);

/// Highest jet order appearing in e.
int jet_order(const Expr& e, const JetConvention& conv);

/// True if any jet variable in e carries a derivative along `axis`.
bool uses_axis(const Expr& e, const JetConvention& conv, std::size_t axis);

/// Replaces every jet variable of `jet_expr` by the matching partial derivative
/// of the field expression `field` (an expression in the coordinates). The
/// result is an ordinary expression in the coordinates.
Expr compose_jets(const Expr& jet_expr, const Expr& field, const JetConvention& conv);

}  // namespace pbs

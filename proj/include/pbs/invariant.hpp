#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pbs/branch.hpp"
#include "pbs/expr.hpp"

namespace pbs {

/// A scalar function of the first jet (u, u_x), either closed form or
/// computed numerically. Numeric ones expose central-difference partials.
class JetFunctional {
 public:
  virtual ~JetFunctional() = default;

  virtual double value(double u, double ux) const = 0;
  /// (d/du, d/du_x). Central differences with h = 1e-6 unless overridden.
  virtual std::array<double, 2> gradient(double u, double ux) const;
  /// The closed form, when there is one.
  virtual std::optional<Expr> expr() const { return std::nullopt; }
};

using JetFunctionalPtr = std::shared_ptr<const JetFunctional>;

/// Wraps an expression in u and u_x; the gradient is exact.
JetFunctionalPtr closed_form(Expr e);

/// Settings for the level-set quadrature used when F depends on u_x.
struct LevelSetConfig {
  /// Lower limit of the u-integral. Any value on the same side of every
  /// singularity works; changing it adds a function of F only.
  double reference_u = 1.0;
  /// Bisection fallback for the level-set slope y(b), applied to |y| with the
  /// sign of u_x.
  std::optional<std::pair<double, double>> slope_bracket = std::pair{1e-6, 1e6};
  int panels = 16;
};

/// Solution of u_x^2 (A_{u_x} F_u - A_u F_{u_x}) = a (u_x F)_{u_x}.
/// DegenerateCase when F_u = F_{u_x} = 0 and a != 0.
JetFunctionalPtr build_A(const Branch1D& br, double a, const LevelSetConfig& cfg = {});
/// Solution of u_x^2 (B_{u_x} F_u - B_u F_{u_x}) = -b.
JetFunctionalPtr build_B(const Branch1D& br, double b, const LevelSetConfig& cfg = {});
/// Solution of F_{u_x} G_u - F_u G_{u_x} = c u_x^-2; c = 0 gives G = F.
JetFunctionalPtr build_G(const Branch1D& br, double c, const LevelSetConfig& cfg = {});

// Defining-equation residuals at a jet point.
Residual A_equation_residual(const Branch1D& br, const JetFunctional& A, double a, double u, double ux);
Residual B_equation_residual(const Branch1D& br, const JetFunctional& B, double b, double u, double ux);
Residual G_equation_residual(const Branch1D& br, const JetFunctional& G, double c, double u, double ux);

/// phi_t - (u_x F)_{u_x} phi_x along the background.
Residual invariant_residual_1d(const Branch1D& br, const BackgroundSolution& bg, const Expr& phi,
                               std::span<const double> p);
/// Same for phi = c_t t + c_x x + A(u, u_x), with A's partials taken from the
/// functional.
Residual invariant_residual_1d(const Branch1D& br, const BackgroundSolution& bg, const JetFunctional& A, double c_t,
                               double c_x, std::span<const double> p);
/// sum_i F_{u_i} phi_i along the background.
Residual invariant_residual_nd(const BranchND& br, const BackgroundSolution& bg, const Expr& phi,
                               std::span<const double> p);

/// (1/D_x G) D_x h as a jet expression.
Expr apply_invariant_operator(const Expr& G, const Expr& h, const JetConvention& conv);
/// (1/P) D_x h for an arbitrary jet-expression denominator P.
Expr apply_operator_with_denominator(const Expr& P, const Expr& h, const JetConvention& conv);
/// Pointwise (1/D_x G) D_x h at a jet point; works for numeric G.
/// Singularity when |D_x G| < 1e-12.
double apply_invariant_operator_at(const JetFunctional& G, const Expr& h, const JetConvention& conv,
                                   const Bindings& jets);

struct NDLevelSetConfig {
  double reference_u0 = 1.0;
  /// Bisection fallback for the level-set root f.
  std::optional<std::pair<double, double>> root_bracket;
  int panels = 16;
};

/// A_i(u, u_0, ..., u_n) such that x_i + A_i is invariant: the integral over
/// b from reference_u0 to u_0 of F_{u_i}/(b F_u), evaluated at (f, b, b tau)
/// where tau_a = u_a/u_0 and f solves F(f, b, b tau) = F(u, u_0, ..., u_n).
class NDInvariant {
 public:
  NDInvariant(const BranchND& br, std::size_t index, const NDLevelSetConfig& cfg);

  std::size_t index() const noexcept { return index_; }
  /// jets = (u, u_0, ..., u_n).
  double value(std::span<const double> jets) const;
  /// Central differences, h = 1e-6.
  std::vector<double> gradient(std::span<const double> jets) const;

 private:
  std::size_t index_;
  int n_;
  NDLevelSetConfig cfg_;
  Program F_, F_u_, F_ui_;
};

/// FUZero when F_u vanishes identically; InvalidArgument for i > n.
NDInvariant build_Ai_nd(const BranchND& br, std::size_t i, const NDLevelSetConfig& cfg = {});

/// Invariant residual of x_i + A_i along the background.
Residual invariant_residual_nd(const BranchND& br, const BackgroundSolution& bg, const NDInvariant& A,
                               std::span<const double> p);

}  // namespace pbs

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pbs/expr.hpp"
#include "pbs/jet.hpp"

namespace pbs {

/// A residual together with the magnitude of the terms that produced it.
/// `scale` is the largest absolute additive term, so |value| <= tol * scale
/// is a relative test that still works when the terms cancel.
struct Residual {
  double value = 0;
  double scale = 0;

  bool passes(double tol) const { return std::abs(value) <= tol * scale || value == 0; }
  double relative() const { return scale > 0 ? std::abs(value) / scale : std::abs(value); }
};

class BranchND;

/// Evolution branch u_t = F(u, u_x) u_x in the 1+1 convention.
class Branch1D {
 public:
  explicit Branch1D(Expr F);

  const Expr& F() const noexcept { return F_; }
  const Expr& F_u() const noexcept { return F_u_; }
  const Expr& F_ux() const noexcept { return F_ux_; }
  /// (u_x F)_{u_x}, the characteristic speed.
  const Expr& flux_ux() const noexcept { return flux_ux_; }
  /// u_x F, the right-hand side of the evolution equation.
  const Expr& rhs() const noexcept { return rhs_; }
  const JetConvention& conv() const noexcept { return conv_; }

  /// The same equation written implicitly for n = 1: u_x0 - u_x1 F(u, u_x1).
  BranchND as_nd() const;

 private:
  Expr F_, F_u_, F_ux_, flux_ux_, rhs_;
  JetConvention conv_;
};

/// Implicit first-order equation F(u, u_x0, ..., u_xn) = 0, no explicit
/// coordinate dependence.
class BranchND {
 public:
  BranchND(int n, Expr F);

  int n() const noexcept { return n_; }
  const Expr& F() const noexcept { return F_; }
  const Expr& F_u() const noexcept { return F_u_; }
  /// F_{u_xi}, i = 0..n.
  const Expr& F_ui(std::size_t i) const { return F_ui_.at(i); }
  const JetConvention& conv() const noexcept { return conv_; }

 private:
  int n_;
  Expr F_, F_u_;
  std::vector<Expr> F_ui_;
  JetConvention conv_;
};

/// Closed-form solution field U(coordinates), with its first and second
/// partial derivatives precomputed.
class BackgroundSolution {
 public:
  BackgroundSolution(Expr U, JetConvention conv);

  /// Same, and checks the PDE residual at `samples` (rel. 1e-10), throwing
  /// ValidationFailure naming the first failing point.
  static BackgroundSolution checked(Expr U, const Branch1D& br, const std::vector<std::vector<double>>& samples);
  static BackgroundSolution checked(Expr U, const BranchND& br, const std::vector<std::vector<double>>& samples);

  const Expr& U() const noexcept { return U_; }
  const JetConvention& conv() const noexcept { return conv_; }
  const Expr& d(std::size_t axis) const { return first_.at(axis); }
  const Expr& d(std::size_t a, std::size_t b) const { return second_.at(a).at(b); }

  Bindings bind(std::span<const double> p) const;

 private:
  Expr U_;
  JetConvention conv_;
  std::vector<Expr> first_;
  std::vector<std::vector<Expr>> second_;
};

/// Evaluates a fixed list of coordinate expressions and reports their sum as
/// a Residual. Built once, evaluated at many points.
class TermProbe {
 public:
  TermProbe(std::vector<Expr> terms, std::vector<std::string> coordinates);

  Residual operator()(std::span<const double> p) const;
  const std::vector<Expr>& terms() const noexcept { return terms_; }

 private:
  std::vector<Expr> terms_;
  Program program_;
};

/// Jet expression composed with a field, as an expression of the coordinates.
/// Thin wrapper over compose_jets for readability at call sites.
Expr along(const Expr& jet_expr, const Expr& field, const JetConvention& conv);

// Probe builders. Each returns the additive terms of the relevant residual
// with the field substituted, so derivatives are exact. Total derivatives of
// sigma or phi are split into their chain-rule terms before substitution, so
// the scale stays meaningful when the composed field is trivially constant.
TermProbe pde_probe(const Branch1D& br, const Expr& u);
TermProbe pde_probe(const BranchND& br, const Expr& u);
TermProbe linearized_probe(const Branch1D& br, const Expr& background, const Expr& sigma);
TermProbe linearized_probe(const BranchND& br, const Expr& background, const Expr& sigma);
TermProbe invariant_probe(const Branch1D& br, const Expr& background, const Expr& phi);
TermProbe invariant_probe(const BranchND& br, const Expr& background, const Expr& phi);

/// u_t - F(u, u_x) u_x at p = (t, x).
Residual pde_residual_1d(const Branch1D& br, const Expr& u, std::span<const double> p);
/// F(u, u_x0, ..., u_xn) at p = (x0, ..., xn).
Residual pde_residual_nd(const BranchND& br, const Expr& u, std::span<const double> p);

/// sigma_t - F_u u_x sigma - (u_x F)_{u_x} sigma_x along the background.
Residual linearized_residual_1d(const Branch1D& br, const BackgroundSolution& bg, const Expr& sigma,
                                std::span<const double> p);
/// F_u sigma + sum_i F_{u_i} sigma_i along the background.
Residual linearized_residual_nd(const BranchND& br, const BackgroundSolution& bg, const Expr& sigma,
                                std::span<const double> p);

}  // namespace pbs

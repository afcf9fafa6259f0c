#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbs/branch.hpp"
#include "pbs/expr.hpp"
#include "pbs/numeric.hpp"

namespace pbs {

/// Names of the transform-function arguments: "eta" in the 1+1 convention,
/// "eta1".."etan" otherwise.
std::vector<std::string> eta_names(const JetConvention& conv);

/// Seed solution plus transform function g(eta). The new solution is
/// u'(p) = U(p') with p' solving
///   x0' = x0 - g + sum_b eta_b g_b,   x_a' = x_a - g_a,   eta_a = U_a/U_0 at p'.
class TransformSpec {
 public:
  TransformSpec(Expr seed, Expr g, JetConvention conv, num::NewtonConfig cfg = {});

  const BackgroundSolution& seed() const noexcept { return seed_; }
  const Expr& g() const noexcept { return g_; }
  const JetConvention& conv() const noexcept { return seed_.conv(); }
  const num::NewtonConfig& newton() const noexcept { return cfg_; }
  std::size_t dims() const noexcept { return conv().axis_count(); }

  /// U and its first and second partials at a point: U, U_j (j < m), then
  /// U_jk row-major. m = dims().
  std::vector<double> seed_jet(std::span<const double> p) const;
  /// g, g_a, g_ab (row-major) at eta.
  std::vector<double> g_jet(std::span<const double> eta) const;

 private:
  BackgroundSolution seed_;
  Expr g_;
  num::NewtonConfig cfg_;
  Program seed_program_;
  Program g_program_;
};

struct PrimedCoords {
  std::vector<double> primed;
  std::vector<double> eta;
  int iterations = 0;
  /// 1 when the direct solve worked, 4 when the g-homotopy was needed.
  int stages = 1;
};

/// Dedicated 2x2 path in the 1+1 convention, the general path otherwise.
/// Errors: ConvergenceFailure, SingularJacobian, DomainExit, U0Zero.
PrimedCoords solve_primed_coords(const TransformSpec& ts, std::span<const double> p);
/// The general (n+1)-dimensional path, usable for any convention.
PrimedCoords solve_primed_coords_general(const TransformSpec& ts, std::span<const double> p);

/// u'(p) = U(p').
double evaluate_pbs(const TransformSpec& ts, std::span<const double> p);

struct JacobianReport {
  PrimedCoords primed;
  double Delta = 0;
  double delta = 0;
  double delta1 = 0;
  double delta2 = 0;
  double scale = 0;  // largest term of delta
};

/// Closed-form delta, delta1, delta2 and Delta = U_0^3 / delta at an already
/// solved primed point (1+1 only). Caustic when |delta| < 1e-10 scale.
JacobianReport jacobian_at_primed(const TransformSpec& ts, std::span<const double> primed);
/// Solves for the primed point, then as above.
JacobianReport jacobian_delta(const TransformSpec& ts, std::span<const double> p);

/// Determinant of d p' / d p by central differences.
double fd_jacobian_determinant(const TransformSpec& ts, std::span<const double> p, double h = 1e-5);

/// Solves at every node of the five-point stencil around p. Caustic when the
/// primed point jumps between root sheets there (finite differences across a
/// fold are meaningless); solver errors at the nodes propagate.
void check_stencil_sheet(const TransformSpec& ts, std::span<const double> p, double h = 1e-5);

/// Per axis j: |FD_j u'(p) - U_j(p')|, five-point stencil.
std::vector<double> derivative_transport_check(const TransformSpec& ts, std::span<const double> p, double h = 1e-5);

/// True iff the map p -> (U_1/U_0, ..., U_n/U_0) has numerical rank < n at
/// every sample (singular values of its FD Jacobian against 1e-8). Samples
/// where the seed is undefined are skipped; Domain if none remain.
bool detect_degenerate_seed(const Expr& seed, const JetConvention& conv,
                            const std::vector<std::vector<double>>& samples);

/// Message explaining why a degenerate seed cannot be transformed.
std::string degeneracy_diagnosis(const JetConvention& conv);

/// PDE residual of a numerically defined field, derivatives by five-point
/// central differences with step h.
class FdResidual {
 public:
  explicit FdResidual(const Branch1D& br);
  explicit FdResidual(const BranchND& br);

  Residual operator()(const num::PointFn& u, std::span<const double> p, double h = 1e-5) const;

 private:
  bool evolution_;
  std::size_t axes_;
  Program terms_;  // inputs u, first derivatives
};

/// Second family for the toy model, built from the travelling seed
/// sqrt(2(x+t)) and a monotone Y on [lo, hi]:
///   u = S(Yi(a + Y(-xi-2t))) / S(-xi-2t) sqrt(2 xi + 2t),   S = 1/Y',
///   x = 2(xi + t) S(Yi(a + Y(-xi-2t))) / S(-xi-2t) + Yi(a + Y(-xi-2t)).
class Type2Spec {
 public:
  /// Y is an expression in "y". InvalidArgument if Y' changes sign or
  /// vanishes on a sample of the interval.
  Type2Spec(Expr Y, double lo, double hi, double a, num::NewtonConfig cfg = {});

  double Y(double y) const;
  double S(double y) const;
  /// Inverse of Y on [lo, hi]; Domain if z is outside Y([lo, hi]).
  double Y_inverse(double z) const;
  double a() const noexcept { return a_; }
  std::pair<double, double> interval() const noexcept { return {lo_, hi_}; }
  const num::NewtonConfig& newton() const noexcept { return cfg_; }

 private:
  Expr Y_expr_;
  Program Y_, dY_;
  double lo_, hi_, a_;
  num::NewtonConfig cfg_;
};

struct Type2Point {
  double xi = 0;
  double u = 0;
};

/// Solves the implicit equation for xi by Newton from xi = x, with a scan for
/// a sign change as fallback; BracketFailure if there is no root.
Type2Point solve_type2(const Type2Spec& t2, double x, double t);
double evaluate_type2_pbs(const Type2Spec& t2, double x, double t);

}  // namespace pbs

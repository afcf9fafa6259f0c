#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbs/error.hpp"

namespace pbs::num {

struct NewtonConfig {
  double abs_tolerance = 1e-12;
  int max_iterations = 50;
  int max_halvings = 20;
  // Convergence also requires the next Newton step to be this small
  // (relative to 1 + |z|); a shrinking residual with non-shrinking steps,
  // as for exp(z), is not convergence.
  double step_tolerance = 1e-8;
  double singular_condition = 1e14;
  // Scalar problems only: bisection fallback when Newton fails.
  std::optional<std::pair<double, double>> bracket;
};

struct NewtonResult {
  std::vector<double> z;
  int iterations = 0;
  double residual_norm = 0;
  std::vector<std::vector<double>> iterates;  // z_0 .. z_k
};

using VectorFn = std::function<std::vector<double>(std::span<const double>)>;
using JacobianFn = std::function<Eigen::MatrixXd(std::span<const double>)>;
using ScalarFn = std::function<double(double)>;

/// Damped Newton. The residual may throw pbs::Error(Domain) to signal that a
/// trial point is outside its domain; the step is then halved.
///
/// Errors: ConvergenceFailure, SingularJacobian, DomainExit.
NewtonResult newton_solve(const VectorFn& residual, const JacobianFn& jacobian, std::vector<double> initial,
                          const NewtonConfig& cfg = {});

/// Same, with a central finite-difference Jacobian.
NewtonResult newton_solve(const VectorFn& residual, std::vector<double> initial, const NewtonConfig& cfg = {});

Eigen::MatrixXd fd_jacobian(const VectorFn& f, std::span<const double> at, double h = 1e-7);

struct ScalarRoot {
  double z = 0;
  int iterations = 0;
  bool bisected = false;
};

/// Scalar Newton with derivative (or FD derivative when `derivative` is
/// empty), falling back to bisection on cfg.bracket. BracketFailure when the
/// bracket does not straddle a sign change.
ScalarRoot solve_scalar(const ScalarFn& f, const ScalarFn& derivative, double initial, const NewtonConfig& cfg = {});

double bisect(const ScalarFn& f, double lo, double hi, double abs_tolerance = 1e-15, int max_iterations = 200);

struct QuadratureConfig {
  double relative_tolerance = 1e-10;
  int max_depth = 40;
};

struct QuadratureResult {
  double value = 0;
  double error_estimate = 0;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) with global error control. Throws
/// QuadratureError naming the worst interval once it cannot be split further.
QuadratureResult integrate(const ScalarFn& f, double a, double b, const QuadratureConfig& cfg = {});

/// Fixed composite 10-point Gauss-Legendre rule. Smooth in any parameters
/// the integrand depends on, which adaptive rules are not.
double gauss_legendre(const ScalarFn& f, double a, double b, int panels);

/// Nodes and weights of the same composite rule, for callers that need to
/// visit nodes in a particular order.
std::vector<std::pair<double, double>> gauss_legendre_nodes(double a, double b, int panels);

/// O(h^2) central difference, order 1 or 2. DomainExit if f fails at any
/// stencil point.
double central_fd(const ScalarFn& f, double at, int order, double h);

/// O(h^4) five-point first derivative, same error contract. At h = 1e-5 the
/// truncation error stays below roundoff even where f is steep.
double central_fd5(const ScalarFn& f, double at, double h);

// ---------------------------------------------------------------------------
// Grids

struct GridAxis {
  std::string name;
  double start = 0;
  double stop = 0;
  std::size_t count = 1;

  double at(std::size_t i) const;
};

class GridSpec {
 public:
  GridSpec() = default;
  explicit GridSpec(std::vector<GridAxis> axes);

  /// "name:start:stop:count" items joined by commas.
  static GridSpec parse(std::string_view text);
  std::string to_string() const;

  const std::vector<GridAxis>& axes() const noexcept { return axes_; }
  std::size_t size() const noexcept;
  /// Row-major in axis-declaration order: the last axis varies fastest.
  std::vector<double> point(std::size_t flat_index) const;
  std::vector<std::string> names() const;

 private:
  std::vector<GridAxis> axes_;
};

struct GridField {
  GridSpec spec;
  std::vector<double> values;
  std::vector<std::optional<ErrorCode>> mask;  // set = cell failed, with reason

  std::size_t masked_count() const;
  bool valid(std::size_t i) const { return !mask[i].has_value(); }
};

using PointFn = std::function<double(std::span<const double>)>;

/// Evaluates f at every grid point. Failures (pbs::Error or non-finite values)
/// mask the cell instead of aborting. Cells are independent, so the result is
/// identical for any thread count; threads == 0 picks the hardware count.
GridField sample_grid(const PointFn& f, const GridSpec& spec, unsigned threads = 0);

/// Runs `body(i)` for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace pbs::num

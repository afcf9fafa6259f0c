#include <algorithm>
#include <cmath>
#include <limits>

#include "pbs/numeric.hpp"

namespace pbs::num {

namespace {

double inf_norm(std::span<const double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// nullopt when the residual is undefined at z.
std::optional<std::vector<double>> try_eval(const VectorFn& f, std::span<const double> z) {
  try {
    auto r = f(z);
    if (!all_finite(r)) return std::nullopt;
    return r;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Domain || e.code() == ErrorCode::DomainExit || e.code() == ErrorCode::U0Zero ||
        e.code() == ErrorCode::NonFinite)
      return std::nullopt;
    throw;
  }
}

}  // namespace

Eigen::MatrixXd fd_jacobian(const VectorFn& f, std::span<const double> at, double h) {
  std::vector<double> z(at.begin(), at.end());
  const std::size_t n = z.size();
  Eigen::MatrixXd J;
  for (std::size_t j = 0; j < n; ++j) {
    const double step = h * std::max(1.0, std::fabs(z[j]));
    const double saved = z[j];
    z[j] = saved + step;
    auto fp = f(z);
    z[j] = saved - step;
    auto fm = f(z);
    z[j] = saved;
    if (J.size() == 0) J.resize(static_cast<Eigen::Index>(fp.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < fp.size(); ++i)
      J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (fp[i] - fm[i]) / (2 * step);
  }
  return J;
}

NewtonResult newton_solve(const VectorFn& residual, const JacobianFn& jacobian, std::vector<double> initial,
                          const NewtonConfig& cfg) {
  if (!(cfg.abs_tolerance > 0) || cfg.max_iterations < 1)
    throw Error(ErrorCode::InvalidArgument, "newton: tolerance must be > 0 and max_iterations >= 1");

  NewtonResult out;
  std::vector<double> z = std::move(initial);
  out.iterates.push_back(z);
  auto r = try_eval(residual, z);
  if (!r) throw Error(ErrorCode::DomainExit, "newton: residual undefined at the initial point");
  double norm = inf_norm(*r);

  const auto n = static_cast<Eigen::Index>(z.size());
  for (int iter = 0;; ++iter) {
    Eigen::MatrixXd J;
    try {
      J = jacobian(z);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Domain) throw Error(ErrorCode::DomainExit, "newton: jacobian undefined");
      throw;
    }
    if (!J.allFinite()) throw Error(ErrorCode::DomainExit, "newton: jacobian not finite");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0) || smax / smin > cfg.singular_condition)
      throw Error(ErrorCode::SingularJacobian, "newton: jacobian condition estimate exceeds limit");

    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = -(*r)[static_cast<std::size_t>(i)];
    const Eigen::VectorXd dz = svd.solve(rhs);
    double step_norm = dz.lpNorm<Eigen::Infinity>();
    const double scale = 1.0 + inf_norm(z);

    if (norm <= cfg.abs_tolerance && step_norm <= cfg.step_tolerance * scale) {
      // Converged; take the final (tiny) step if it does not hurt.
      std::vector<double> polished = z;
      for (Eigen::Index i = 0; i < n; ++i) polished[static_cast<std::size_t>(i)] += dz(i);
      if (auto rp = try_eval(residual, polished); rp && inf_norm(*rp) <= norm) {
        z = std::move(polished);
        norm = inf_norm(*rp);
        out.iterates.push_back(z);
      }
      out.z = std::move(z);
      out.iterations = iter;
      out.residual_norm = norm;
      return out;
    }
    if (iter >= cfg.max_iterations)
      throw Error(ErrorCode::ConvergenceFailure,
                  "newton: no convergence after " + std::to_string(cfg.max_iterations) + " iterations");

    double lambda = 1.0;
    bool accepted = false;
    bool any_defined = false;
    for (int h = 0; h <= cfg.max_halvings; ++h, lambda *= 0.5) {
      std::vector<double> trial = z;
      for (Eigen::Index i = 0; i < n; ++i) trial[static_cast<std::size_t>(i)] += lambda * dz(i);
      auto rt = try_eval(residual, trial);
      if (!rt) continue;
      any_defined = true;
      const double tn = inf_norm(*rt);
      if (tn < norm || tn <= cfg.abs_tolerance) {
        z = std::move(trial);
        r = std::move(rt);
        norm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!any_defined) throw Error(ErrorCode::DomainExit, "newton: residual undefined along the search direction");
      throw Error(ErrorCode::ConvergenceFailure, "newton: line search could not reduce the residual");
    }
    out.iterates.push_back(z);
  }
}

NewtonResult newton_solve(const VectorFn& residual, std::vector<double> initial, const NewtonConfig& cfg) {
  return newton_solve(
      residual, [&](std::span<const double> z) { return fd_jacobian(residual, z); }, std::move(initial), cfg);
}

double bisect(const ScalarFn& f, double lo, double hi, double abs_tolerance, int max_iterations) {
  double flo = 0, fhi = 0;
  try {
    flo = f(lo);
    fhi = f(hi);
  } catch (const Error&) {
    throw Error(ErrorCode::BracketFailure, "bisection: function undefined at a bracket end");
  }
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if (std::signbit(flo) == std::signbit(fhi))
    throw Error(ErrorCode::BracketFailure, "bisection: bracket does not straddle a sign change");
  for (int i = 0; i < max_iterations && std::fabs(hi - lo) > abs_tolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    double fm = 0;
    try {
      fm = f(mid);
    } catch (const Error&) {
      throw Error(ErrorCode::BracketFailure, "bisection: function undefined inside the bracket");
    }
    if (fm == 0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ScalarRoot solve_scalar(const ScalarFn& f, const ScalarFn& derivative, double initial, const NewtonConfig& cfg) {
  VectorFn r = [&](std::span<const double> z) { return std::vector<double>{f(z[0])}; };
  JacobianFn j;
  if (derivative) {
    j = [&](std::span<const double> z) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = derivative(z[0]);
      return m;
    };
  } else {
    j = [&](std::span<const double> z) { return fd_jacobian(r, z); };
  }
  try {
    auto res = newton_solve(r, j, {initial}, cfg);
    const double z = res.z[0];
    if (!cfg.bracket || (z >= std::min(cfg.bracket->first, cfg.bracket->second) &&
                         z <= std::max(cfg.bracket->first, cfg.bracket->second)))
      return ScalarRoot{z, res.iterations, false};
  } catch (const Error&) {
    if (!cfg.bracket) throw;
  }
  const double z = bisect(f, cfg.bracket->first, cfg.bracket->second);
  return ScalarRoot{z, 0, true};
}

}  // namespace pbs::num

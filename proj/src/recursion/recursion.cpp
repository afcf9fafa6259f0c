#include "pbs/recursion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pbs/error.hpp"
#include "pbs/jet.hpp"

namespace pbs {

namespace {

const std::vector<std::array<double, 2>> kDefaultJetSamples = {
    {0.7, 0.6}, {0.7, -1.4}, {1.3, 1.4}, {1.3, -0.6}, {1.9, 0.9}, {1.9, -1.1}, {1.1, 2.3}, {2.6, 0.45}};

Expr dx(const Expr& e) { return differentiate(e, "x"); }

// Phi applied to explicit functions of x.
struct ProfileOps {
  const RecursionSpec& rs;
  const JetConvention& conv;

  Expr factor(const Expr& u) const { return dx(u) / along(rs.G1(), u, conv); }

  Expr phi(const Expr& u, const Expr& sigma) const { return factor(u) * dx(sigma / dx(u)); }

  // The two parts of Phi'[h] sigma: the derivative of u_x/G1 against
  // D_x(sigma/u_x), and u_x/G1 against the derivative of D_x(sigma/u_x).
  std::array<Expr, 2> phi_prime(const Expr& u, const Expr& h, const Expr& sigma) const {
    const Expr eps = Expr::variable("eps");
    const Expr dfactor = substitute(differentiate(factor(u + eps * h), "eps"), {{"eps", Expr::constant(0)}});
    const Expr ux = dx(u);
    return {dfactor * dx(sigma / ux), factor(u) * dx(-(sigma * dx(h)) / (ux * ux))};
  }
};

}  // namespace

RecursionSpec::RecursionSpec(Branch1D br, Expr G) : RecursionSpec(std::move(br), std::move(G), kDefaultJetSamples) {}

RecursionSpec::RecursionSpec(Branch1D br, Expr G, const std::vector<std::array<double, 2>>& jet_samples)
    : br_(std::move(br)), G_(std::move(G)) {
  for (const auto& v : free_variables(G_))
    if (v != "u" && v != "u_x")
      throw Error(ErrorCode::InvalidArgument, "G may only depend on u and u_x; found '" + v + "'");
  G1_ = total_x_derivative(G_, br_.conv());
  const Expr ux = Expr::variable("u_x");
  const Expr bracket_terms[2] = {ux * ux * br_.F_ux() * differentiate(G_, "u"),
                                 -(ux * ux * br_.F_u() * differentiate(G_, "u_x"))};
  std::vector<std::array<double, 2>> used;  // (value, scale)
  for (const auto& [u, v] : jet_samples) {
    try {
      const Bindings b{{"u", u}, {"u_x", v}};
      const double t0 = evaluate(bracket_terms[0], b), t1 = evaluate(bracket_terms[1], b);
      used.push_back({t0 + t1, std::max(std::abs(t0), std::abs(t1))});
    } catch (const Error&) {
      // outside G's domain; skip
    }
  }
  if (used.empty()) throw Error(ErrorCode::ValidationFailure, "G could not be evaluated at any sample jet point");
  c_ = used.front()[0];
  for (const auto& [value, scale] : used)
    if (std::abs(value - c_) > 1e-8 * std::max({scale, std::abs(c_), 1e-300}))
      throw Error(ErrorCode::ValidationFailure, "G = " + to_string(G_) +
                                                    " does not satisfy F_{u_x} G_u - F_u G_{u_x} = c u_x^-2 for a "
                                                    "single constant c");
}

Expr apply_recursion(const RecursionSpec& rs, const Expr& sigma) {
  const auto& conv = rs.branch().conv();
  const Expr ux = Expr::variable("u_x");
  return (ux / rs.G1()) * total_x_derivative(sigma / ux, conv);
}

std::vector<Expr> hierarchy(const RecursionSpec& rs, int m_max) {
  if (m_max < 0) throw Error(ErrorCode::InvalidArgument, "hierarchy: m_max must be >= 0");
  std::vector<Expr> K{rs.branch().rhs()};
  for (int m = 0; m < m_max; ++m) K.push_back(apply_recursion(rs, K.back()));
  return K;
}

Residual hereditary_residual(const RecursionSpec& rs, const Expr& f, const Expr& g, const Expr& u, double at) {
  const auto& conv = rs.branch().conv();
  const ProfileOps ops{rs, conv};
  const Bindings b{{"x", at}};
  auto side = [&](const Expr& a, const Expr& c, std::array<double, 3>& blocks) {
    const auto outer = ops.phi_prime(u, ops.phi(u, a), c);
    const auto inner = ops.phi_prime(u, a, c);
    blocks = {evaluate(outer[0], b), evaluate(outer[1], b), evaluate(ops.phi(u, inner[0] + inner[1]), b)};
    return (blocks[0] + blocks[1]) - blocks[2];
  };
  std::array<double, 3> bf{}, bg{};
  const double sf = side(f, g, bf);
  const double sg = side(g, f, bg);
  Residual r;
  r.value = sf - sg;
  for (double v : bf) r.scale = std::max(r.scale, std::abs(v));
  for (double v : bg) r.scale = std::max(r.scale, std::abs(v));
  return r;
}

std::vector<Expr> frechet_terms(const Expr& K, const Expr& u, const Expr& h, const JetConvention& conv) {
  std::vector<Expr> terms;
  for (const auto& v : free_variables(K)) {
    auto alpha = conv.classify(v);
    if (!alpha) continue;
    Expr dh = h;
    for (std::size_t axis = 0; axis < alpha->size(); ++axis)
      for (int k = 0; k < (*alpha)[axis]; ++k) dh = differentiate(dh, conv.coordinate(axis));
    terms.push_back(along(differentiate(K, v), u, conv) * dh);
  }
  return terms;
}

Residual frechet_commutator(const Expr& K1, const Expr& K2, const Expr& u, const JetConvention& conv, double at) {
  const Bindings b{{"x", at}, {"t", 0.0}};
  Residual r;
  auto add = [&](const std::vector<Expr>& terms, double sign) {
    for (const auto& t : terms) {
      const double v = evaluate(t, b);
      r.value += sign * v;
      r.scale = std::max(r.scale, std::abs(v));
    }
  };
  add(frechet_terms(K1, u, along(K2, u, conv), conv), 1.0);
  add(frechet_terms(K2, u, along(K1, u, conv), conv), -1.0);
  return r;
}

namespace {

Expr random_poly(std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<double> c(-1, 1);
  const Expr x = Expr::variable("x");
  Expr p = Expr::constant(c(rng));
  for (int k = 1; k <= degree; ++k) p = p + c(rng) * pow(x, static_cast<double>(k));
  return p;
}

void record(TrialSummary& s, const Residual& r, double tol) {
  ++s.trials;
  s.max_relative = std::max(s.max_relative, r.value == 0 ? 0.0 : r.relative());
  if (!r.passes(tol)) ++s.failures;
}

}  // namespace

TrialSummary hereditary_trials(const RecursionSpec& rs, int trials, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xs(-1, 1);
  const auto& conv = rs.branch().conv();
  TrialSummary out;
  while (out.trials < trials) {
    if (out.skipped > 100 * trials + 1000)
      throw Error(ErrorCode::ConvergenceFailure, "hereditary trials: too many rejected draws");
    const Expr f = random_poly(rng, 3), g = random_poly(rng, 3), u = random_poly(rng, 3);
    const double at = xs(rng);
    const Bindings b{{"x", at}};
    try {
      if (std::abs(evaluate(differentiate(u, "x"), b)) < 0.1 ||
          std::abs(evaluate(along(rs.G1(), u, conv), b)) < 0.1) {
        ++out.skipped;
        continue;
      }
    } catch (const Error&) {
      ++out.skipped;
      continue;
    }
    record(out, hereditary_residual(rs, f, g, u, at), tol);
    if (hereditary_residual(rs, f, f, u, at).value != 0) out.diagonal_zero = false;
  }
  return out;
}

TrialSummary commutator_trials(const Expr& K1, const Expr& K2, const JetConvention& conv, int trials,
                               std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(-1, 1), mag(0.5, 1.5);
  const Expr x = Expr::variable("x");
  TrialSummary out;
  while (out.trials < trials) {
    if (out.skipped > 100 * trials + 1000)
      throw Error(ErrorCode::ConvergenceFailure, "commutator trials: too many rejected draws");
    Expr u = Expr::constant(mag(rng));
    u = u + mag(rng) * x;
    double fact = 1;
    for (int k = 2; k <= 7; ++k) {
      fact *= k;
      u = u + (c(rng) / fact) * pow(x, static_cast<double>(k));
    }
    Residual r;
    try {
      r = frechet_commutator(K1, K2, u, conv, 0.0);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::JetOrderOverflow) throw;
      ++out.skipped;
      continue;
    }
    record(out, r, tol);
  }
  return out;
}

}  // namespace pbs

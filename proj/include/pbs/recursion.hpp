#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pbs/branch.hpp"
#include "pbs/expr.hpp"

namespace pbs {

/// Branch plus a closed-form G solving F_{u_x} G_u - F_u G_{u_x} = c u_x^-2.
/// The constant c is inferred from the samples; construction throws
/// ValidationFailure when no single c fits them (rel. 1e-8).
class RecursionSpec {
 public:
  RecursionSpec(Branch1D br, Expr G);
  RecursionSpec(Branch1D br, Expr G, const std::vector<std::array<double, 2>>& jet_samples);

  const Branch1D& branch() const noexcept { return br_; }
  const Expr& G() const noexcept { return G_; }
  /// D_x G.
  const Expr& G1() const noexcept { return G1_; }
  double c() const noexcept { return c_; }

 private:
  Branch1D br_;
  Expr G_, G1_;
  double c_ = 0;
};

/// Phi sigma = (u_x / D_x G) D_x(sigma / u_x). JetOrderOverflow when the
/// result would exceed the order cap.
Expr apply_recursion(const RecursionSpec& rs, const Expr& sigma);

/// K_0 = u_x F, K_{m+1} = Phi K_m, for m = 0..m_max.
std::vector<Expr> hierarchy(const RecursionSpec& rs, int m_max);

/// Hereditary identity
///   Phi'[Phi f] g - Phi'[Phi g] f - Phi(Phi'[f] g - Phi'[g] f)
/// for f, g, u explicit functions of x, evaluated at x = at. Phi' is the
/// exact derivative in the direction of u. The scale is the largest of the six
/// blocks: for each ordering, the two parts of Phi'[Phi .] . and Phi(Phi'[.] .).
Residual hereditary_residual(const RecursionSpec& rs, const Expr& f, const Expr& g, const Expr& u, double at);

/// K'[h] = d/de K(u + e h) at e = 0, for a jet expression K and explicit
/// functions u(x), h(x). Returned as the chain-rule terms
/// dK/du_alpha * d^alpha h / dx^alpha, each an expression in x.
std::vector<Expr> frechet_terms(const Expr& K, const Expr& u, const Expr& h, const JetConvention& conv);

/// K1'[K2] - K2'[K1] along the profile u(x) at x = at.
Residual frechet_commutator(const Expr& K1, const Expr& K2, const Expr& u, const JetConvention& conv, double at);

/// Outcome of a batch of seeded random checks.
struct TrialSummary {
  int trials = 0;
  int skipped = 0;  // draws rejected before evaluation
  int failures = 0;
  double max_relative = 0;
  /// Hereditary only: f = g gave exactly 0 on every trial.
  bool diagonal_zero = true;
};

/// Hereditary residual for `trials` random cubic (f, g, u) with x in [-1, 1].
/// Draws with |u_x| < 0.1 or |D_x G| < 0.1 at the point are redrawn.
TrialSummary hereditary_trials(const RecursionSpec& rs, int trials, std::uint64_t seed, double tol);

/// Frechet commutator of K1, K2 on `trials` random degree-7 Taylor profiles
/// around x = 0 (u, u_x in [0.5, 1.5], higher coefficients in [-1, 1]).
/// Profiles where either flow is undefined are redrawn.
TrialSummary commutator_trials(const Expr& K1, const Expr& K2, const JetConvention& conv, int trials,
                               std::uint64_t seed, double tol);

}  // namespace pbs

#include "pbs/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pbs/error.hpp"
#include "pbs/jet.hpp"
#include "pbs/numeric.hpp"

namespace pbs {

namespace {

constexpr double kFdStep = 1e-6;

double fd_step(double at) { return kFdStep * std::max(1.0, std::abs(at)); }

class ClosedForm final : public JetFunctional {
 public:
  explicit ClosedForm(Expr e)
      : e_(std::move(e)),
        program_({e_, differentiate(e_, "u"), differentiate(e_, "u_x")}, {"u", "u_x"}) {
    for (const auto& v : free_variables(e_))
      if (v != "u" && v != "u_x")
        throw Error(ErrorCode::InvalidArgument, "jet functional may only depend on u and u_x; found '" + v + "'");
  }

  double value(double u, double ux) const override {
    const double in[2] = {u, ux};
    double out[3];
    program_.run(in, out);
    return out[0];
  }

  std::array<double, 2> gradient(double u, double ux) const override {
    const double in[2] = {u, ux};
    double out[3];
    program_.run(in, out);
    return {out[1], out[2]};
  }

  std::optional<Expr> expr() const override { return e_; }

 private:
  Expr e_;
  Program program_;
};

// Solves F(b, y) = k for y by Newton from `guess`, falling back to bisection
// on the configured bracket (applied to |y|, sign of `sign_of`).
double level_set_slope(const Program& F, const Program& Fy, double b, double k, double guess, double sign_of,
                       const std::optional<std::pair<double, double>>& bracket) {
  auto F_at = [&](double y) {
    const double in[2] = {b, y};
    return F.scalar(in) - k;
  };
  double y = guess;
  try {
    for (int it = 0; it < 60; ++it) {
      const double in[2] = {b, y};
      const double r = F.scalar(in) - k;
      const double d = Fy.scalar(in);
      if (r == 0) return y;
      if (d == 0 || !std::isfinite(d) || !std::isfinite(r)) break;
      const double step = r / d;
      y -= step;
      if (!std::isfinite(y)) break;
      if (std::abs(step) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(y)) return y;
    }
  } catch (const Error&) {
    // fall through to the bracket
  }
  if (!bracket)
    throw Error(ErrorCode::ConvergenceFailure, "level-set solve for u_x did not converge at u = " + std::to_string(b));
  const double s = sign_of < 0 ? -1.0 : 1.0;
  return num::bisect(F_at, s * bracket->first, s * bracket->second, 0.0, 400);
}

// Integral along the level set F(b, y(b)) = F(u, u_x) from the reference u to
// u. Nodes are visited outward from u so every Newton solve starts next to
// its root; the fixed rule keeps the result smooth in (u, u_x).
class LevelSetFunctional final : public JetFunctional {
 public:
  enum class Kind { A, B, G };

  LevelSetFunctional(const Branch1D& br, Kind kind, double weight, const LevelSetConfig& cfg)
      : kind_(kind), weight_(weight), cfg_(cfg), F_({br.F()}, {"u", "u_x"}), Fy_({br.F_ux()}, {"u", "u_x"}) {}

  double value(double u, double ux) const override {
    const double in[2] = {u, ux};
    const double k = F_.scalar(in);
    auto nodes = num::gauss_legendre_nodes(cfg_.reference_u, u, cfg_.panels);
    std::stable_sort(nodes.begin(), nodes.end(),
                     [&](const auto& l, const auto& r) { return std::abs(l.first - u) < std::abs(r.first - u); });
    double y = ux;
    double sum = 0;
    for (const auto& [b, w] : nodes) {
      y = level_set_slope(F_, Fy_, b, k, y, ux, cfg_.slope_bracket);
      const double at[2] = {b, y};
      const double fy = Fy_.scalar(at);
      if (fy == 0) throw Error(ErrorCode::Singularity, "F_{u_x} vanishes on the level set at u = " + std::to_string(b));
      double integrand = 0;
      switch (kind_) {
        case Kind::A: integrand = -weight_ * (k + y * fy) / (y * y * fy); break;
        case Kind::B:
        case Kind::G: integrand = weight_ / (y * y * fy); break;
      }
      if (!std::isfinite(integrand)) throw Error(ErrorCode::NonFinite, "level-set integrand is not finite");
      sum += w * integrand;
    }
    return sum;
  }

 private:
  Kind kind_;
  double weight_;
  LevelSetConfig cfg_;
  Program F_, Fy_;
};

bool structurally_zero(const Expr& e) { return e.is_constant(0); }

JetFunctionalPtr build_component(const Branch1D& br, LevelSetFunctional::Kind kind, double weight,
                                 const LevelSetConfig& cfg, const char* name) {
  const Expr ux = Expr::variable("u_x");
  if (weight == 0) return closed_form(kind == LevelSetFunctional::Kind::G ? br.F() : Expr::constant(0));
  if (!structurally_zero(br.F_ux())) return std::make_shared<LevelSetFunctional>(br, kind, weight, cfg);
  if (structurally_zero(br.F_u()))
    throw Error(ErrorCode::DegenerateCase,
                std::string(name) + ": F_u = F_{u_x} = 0, so only a zero parameter admits a solution");
  // F = F(u): characteristics run along u_x at fixed u.
  switch (kind) {
    case LevelSetFunctional::Kind::A: return closed_form(-weight * br.F() / (ux * br.F_u()));
    case LevelSetFunctional::Kind::B:
    case LevelSetFunctional::Kind::G: return closed_form(weight / (ux * br.F_u()));
  }
  return nullptr;
}

struct JetPoint {
  double u, ux, F, F_u, F_ux, flux_ux;
};

JetPoint jet_point(const Branch1D& br, double u, double ux) {
  const Bindings b{{"u", u}, {"u_x", ux}};
  return {u, ux, evaluate(br.F(), b), evaluate(br.F_u(), b), evaluate(br.F_ux(), b), evaluate(br.flux_ux(), b)};
}

Residual sum_terms(std::initializer_list<double> terms) {
  Residual r;
  for (double t : terms) {
    r.value += t;
    r.scale = std::max(r.scale, std::abs(t));
  }
  return r;
}

}  // namespace

std::array<double, 2> JetFunctional::gradient(double u, double ux) const {
  const double hu = fd_step(u), hx = fd_step(ux);
  return {(value(u + hu, ux) - value(u - hu, ux)) / (2 * hu), (value(u, ux + hx) - value(u, ux - hx)) / (2 * hx)};
}

JetFunctionalPtr closed_form(Expr e) { return std::make_shared<ClosedForm>(std::move(e)); }

JetFunctionalPtr build_A(const Branch1D& br, double a, const LevelSetConfig& cfg) {
  return build_component(br, LevelSetFunctional::Kind::A, a, cfg, "build_A");
}

JetFunctionalPtr build_B(const Branch1D& br, double b, const LevelSetConfig& cfg) {
  return build_component(br, LevelSetFunctional::Kind::B, b, cfg, "build_B");
}

JetFunctionalPtr build_G(const Branch1D& br, double c, const LevelSetConfig& cfg) {
  return build_component(br, LevelSetFunctional::Kind::G, c, cfg, "build_G");
}

Residual A_equation_residual(const Branch1D& br, const JetFunctional& A, double a, double u, double ux) {
  const auto j = jet_point(br, u, ux);
  const auto g = A.gradient(u, ux);
  return sum_terms({ux * ux * g[1] * j.F_u, -ux * ux * g[0] * j.F_ux, -a * j.flux_ux});
}

Residual B_equation_residual(const Branch1D& br, const JetFunctional& B, double b, double u, double ux) {
  const auto j = jet_point(br, u, ux);
  const auto g = B.gradient(u, ux);
  return sum_terms({ux * ux * g[1] * j.F_u, -ux * ux * g[0] * j.F_ux, b});
}

Residual G_equation_residual(const Branch1D& br, const JetFunctional& G, double c, double u, double ux) {
  const auto j = jet_point(br, u, ux);
  const auto g = G.gradient(u, ux);
  return sum_terms({j.F_ux * g[0], -j.F_u * g[1], -c / (ux * ux)});
}

Residual invariant_residual_1d(const Branch1D& br, const BackgroundSolution& bg, const Expr& phi,
                               std::span<const double> p) {
  return invariant_probe(br, bg.U(), phi)(p);
}

Residual invariant_residual_1d(const Branch1D& br, const BackgroundSolution& bg, const JetFunctional& A, double c_t,
                               double c_x, std::span<const double> p) {
  const Bindings b = bg.bind(p);
  const double U = evaluate(bg.U(), b);
  const double Ut = evaluate(bg.d(0), b), Ux = evaluate(bg.d(1), b);
  const double Uxt = evaluate(bg.d(1, 0), b), Uxx = evaluate(bg.d(1, 1), b);
  const double speed = evaluate(br.flux_ux(), {{"u", U}, {"u_x", Ux}});
  const auto g = A.gradient(U, Ux);
  // phi_t = c_t + A_u U_t + A_ux U_xt, phi_x = c_x + A_u U_x + A_ux U_xx.
  return sum_terms({c_t, g[0] * Ut, g[1] * Uxt, -speed * c_x, -speed * g[0] * Ux, -speed * g[1] * Uxx});
}

Residual invariant_residual_nd(const BranchND& br, const BackgroundSolution& bg, const Expr& phi,
                               std::span<const double> p) {
  return invariant_probe(br, bg.U(), phi)(p);
}

Expr apply_operator_with_denominator(const Expr& P, const Expr& h, const JetConvention& conv) {
  return total_x_derivative(h, conv) / P;
}

Expr apply_invariant_operator(const Expr& G, const Expr& h, const JetConvention& conv) {
  return apply_operator_with_denominator(total_x_derivative(G, conv), h, conv);
}

double apply_invariant_operator_at(const JetFunctional& G, const Expr& h, const JetConvention& conv,
                                   const Bindings& jets) {
  const double u = jets.at("u"), ux = jets.at("u_x"), uxx = jets.at("u_xx");
  const auto g = G.gradient(u, ux);
  const double DxG = g[0] * ux + g[1] * uxx;
  if (std::abs(DxG) < 1e-12) throw Error(ErrorCode::Singularity, "invariant operator: D_x G vanishes at this point");
  return evaluate(total_x_derivative(h, conv), jets) / DxG;
}

NDInvariant::NDInvariant(const BranchND& br, std::size_t index, const NDLevelSetConfig& cfg)
    : index_(index), n_(br.n()), cfg_(cfg) {
  if (index > static_cast<std::size_t>(br.n()))
    throw Error(ErrorCode::InvalidArgument,
                "invariant index " + std::to_string(index) + " out of range 0.." + std::to_string(br.n()));
  if (br.F_u().is_constant(0)) throw Error(ErrorCode::FUZero, "F_u vanishes identically; A_i is undefined");
  std::vector<std::string> inputs{"u"};
  for (int i = 0; i <= br.n(); ++i) inputs.push_back(br.conv().first_order_name(static_cast<std::size_t>(i)));
  F_ = Program({br.F()}, inputs);
  F_u_ = Program({br.F_u()}, inputs);
  F_ui_ = Program({br.F_ui(index)}, inputs);
}

double NDInvariant::value(std::span<const double> jets) const {
  const auto m = static_cast<std::size_t>(n_) + 2;
  if (jets.size() != m) throw Error(ErrorCode::InvalidArgument, "NDInvariant: expected (u, u_0, ..., u_n)");
  const double u0 = jets[1];
  if (u0 == 0) throw Error(ErrorCode::U0Zero, "u_0 = 0: tau is undefined");
  if ((u0 > 0) != (cfg_.reference_u0 > 0))
    throw Error(ErrorCode::Singularity, "integration path from the reference u_0 crosses b = 0");
  const double k = F_.scalar(jets);
  std::vector<double> tau(jets.begin() + 2, jets.end());
  for (double& t : tau) t /= u0;

  auto nodes = num::gauss_legendre_nodes(cfg_.reference_u0, u0, cfg_.panels);
  std::stable_sort(nodes.begin(), nodes.end(),
                   [&](const auto& l, const auto& r) { return std::abs(l.first - u0) < std::abs(r.first - u0); });
  std::vector<double> args(m);
  double f = jets[0];
  double sum = 0;
  for (const auto& [b, w] : nodes) {
    args[1] = b;
    for (std::size_t a = 0; a < tau.size(); ++a) args[a + 2] = b * tau[a];
    auto residual = [&](double z) {
      args[0] = z;
      return F_.scalar(args) - k;
    };
    bool converged = false;
    try {
      for (int it = 0; it < 60 && !converged; ++it) {
        args[0] = f;
        const double r = F_.scalar(args) - k;
        const double d = F_u_.scalar(args);
        if (r == 0) {
          converged = true;
          break;
        }
        if (d == 0 || !std::isfinite(d) || !std::isfinite(r)) break;
        const double step = r / d;
        f -= step;
        if (!std::isfinite(f)) break;
        converged = std::abs(step) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(f);
      }
    } catch (const Error&) {
      converged = false;
    }
    if (!converged) {
      if (!cfg_.root_bracket)
        throw Error(ErrorCode::ConvergenceFailure, "level-set solve for u did not converge at u_0 = " + std::to_string(b));
      f = num::bisect(residual, cfg_.root_bracket->first, cfg_.root_bracket->second, 0.0, 400);
    }
    args[0] = f;
    const double fu = F_u_.scalar(args);
    if (fu == 0) throw Error(ErrorCode::FUZero, "F_u vanishes on the integration path at u_0 = " + std::to_string(b));
    const double integrand = F_ui_.scalar(args) / (b * fu);
    if (!std::isfinite(integrand)) throw Error(ErrorCode::NonFinite, "A_i integrand is not finite");
    sum += w * integrand;
  }
  return sum;
}

std::vector<double> NDInvariant::gradient(std::span<const double> jets) const {
  std::vector<double> z(jets.begin(), jets.end());
  std::vector<double> g(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double h = fd_step(z[j]);
    const double saved = z[j];
    z[j] = saved + h;
    const double fp = value(z);
    z[j] = saved - h;
    const double fm = value(z);
    z[j] = saved;
    g[j] = (fp - fm) / (2 * h);
  }
  return g;
}

NDInvariant build_Ai_nd(const BranchND& br, std::size_t i, const NDLevelSetConfig& cfg) { return {br, i, cfg}; }

Residual invariant_residual_nd(const BranchND& br, const BackgroundSolution& bg, const NDInvariant& A,
                               std::span<const double> p) {
  const auto& conv = br.conv();
  const std::size_t m = conv.axis_count();
  const Bindings b = bg.bind(p);
  std::vector<double> jets{evaluate(bg.U(), b)};
  Bindings jet_bindings{{"u", jets[0]}};
  for (std::size_t a = 0; a < m; ++a) {
    jets.push_back(evaluate(bg.d(a), b));
    jet_bindings[conv.first_order_name(a)] = jets.back();
  }
  const auto g = A.gradient(jets);
  Residual r;
  auto add = [&](double t) {
    r.value += t;
    r.scale = std::max(r.scale, std::abs(t));
  };
  // phi_j = delta_ij + A_u U_j + sum_k A_{u_k} U_kj.
  for (std::size_t j = 0; j < m; ++j) {
    const double Fj = evaluate(br.F_ui(j), jet_bindings);
    if (j == A.index()) add(Fj);
    add(Fj * g[0] * jets[j + 1]);
    for (std::size_t k = 0; k < m; ++k) add(Fj * g[k + 1] * evaluate(bg.d(k, j), b));
  }
  return r;
}

}  // namespace pbs

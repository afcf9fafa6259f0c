#include "pbs/branch.hpp"

#include <algorithm>
#include <sstream>

#include "pbs/error.hpp"

namespace pbs {

namespace {

void require_jet_only(const Expr& F, const JetConvention& conv, int max_order, const std::string& what) {
  for (const auto& v : free_variables(F)) {
    auto alpha = conv.classify(v);
    if (!alpha || order(*alpha) > max_order)
      throw Error(ErrorCode::InvalidArgument, what + " may only depend on u and first derivatives; found '" + v + "'");
  }
}

std::string describe(std::span<const double> p, const JetConvention& conv) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < p.size(); ++i) out << (i ? ", " : "") << conv.coordinate(i) << "=" << p[i];
  return out.str();
}

template <class Branch>
BackgroundSolution checked_impl(Expr U, const Branch& br, const std::vector<std::vector<double>>& samples) {
  BackgroundSolution bg(std::move(U), br.conv());
  const TermProbe probe = pde_probe(br, bg.U());
  for (const auto& p : samples) {
    const Residual r = probe(p);
    if (!r.passes(1e-10))
      throw Error(ErrorCode::ValidationFailure, "'" + to_string(bg.U()) + "' is not a solution at (" +
                                                    describe(p, br.conv()) + "): residual " + std::to_string(r.value));
  }
  return bg;
}

}  // namespace

Branch1D::Branch1D(Expr F) : F_(std::move(F)), conv_(JetConvention::one_plus_one()) {
  for (const auto& v : free_variables(F_))
    if (v != "u" && v != "u_x")
      throw Error(ErrorCode::InvalidArgument, "F of a 1+1 branch may only depend on u and u_x; found '" + v + "'");
  const Expr ux = Expr::variable("u_x");
  F_u_ = differentiate(F_, "u");
  F_ux_ = differentiate(F_, "u_x");
  rhs_ = ux * F_;
  flux_ux_ = differentiate(rhs_, "u_x");
}

BranchND Branch1D::as_nd() const {
  const Expr G = substitute(F_, {{"u_x", Expr::variable("u_x1")}});
  return BranchND(1, Expr::variable("u_x0") - Expr::variable("u_x1") * G);
}

BranchND::BranchND(int n, Expr F) : n_(n), F_(std::move(F)), conv_(JetConvention::n_plus_one(n)) {
  require_jet_only(F_, conv_, 1, "F");
  F_u_ = differentiate(F_, "u");
  for (int i = 0; i <= n_; ++i) F_ui_.push_back(differentiate(F_, conv_.first_order_name(static_cast<std::size_t>(i))));
}

BackgroundSolution::BackgroundSolution(Expr U, JetConvention conv) : U_(std::move(U)), conv_(std::move(conv)) {
  for (const auto& v : free_variables(U_))
    if (!conv_.axis_of(v))
      throw Error(ErrorCode::InvalidArgument, "background depends on '" + v + "', which is not a coordinate");
  const auto& coords = conv_.coordinates();
  for (const auto& a : coords) first_.push_back(differentiate(U_, a));
  second_.resize(coords.size());
  for (std::size_t a = 0; a < coords.size(); ++a)
    for (std::size_t b = 0; b < coords.size(); ++b)
      second_[a].push_back(b < a ? second_[b][a] : differentiate(first_[a], coords[b]));
}

BackgroundSolution BackgroundSolution::checked(Expr U, const Branch1D& br,
                                               const std::vector<std::vector<double>>& samples) {
  return checked_impl(std::move(U), br, samples);
}

BackgroundSolution BackgroundSolution::checked(Expr U, const BranchND& br,
                                               const std::vector<std::vector<double>>& samples) {
  return checked_impl(std::move(U), br, samples);
}

Bindings BackgroundSolution::bind(std::span<const double> p) const {
  Bindings b;
  for (std::size_t i = 0; i < p.size(); ++i) b[conv_.coordinate(i)] = p[i];
  return b;
}

TermProbe::TermProbe(std::vector<Expr> terms, std::vector<std::string> coordinates)
    : terms_(std::move(terms)), program_(terms_, std::move(coordinates)) {}

Residual TermProbe::operator()(std::span<const double> p) const {
  if (p.size() != program_.inputs().size())
    throw Error(ErrorCode::InvalidArgument, "point has " + std::to_string(p.size()) + " coordinates, expected " +
                                                std::to_string(program_.inputs().size()));
  const auto values = program_(p);
  Residual r;
  for (double v : values) {
    r.value += v;
    r.scale = std::max(r.scale, std::abs(v));
  }
  return r;
}

Expr along(const Expr& jet_expr, const Expr& field, const JetConvention& conv) {
  return compose_jets(jet_expr, field, conv);
}

TermProbe pde_probe(const Branch1D& br, const Expr& u) {
  const auto& conv = br.conv();
  return TermProbe({differentiate(u, "t"), -along(br.rhs(), u, conv)}, conv.coordinates());
}

TermProbe pde_probe(const BranchND& br, const Expr& u) {
  std::vector<Expr> terms;
  for (const auto& term : additive_terms(br.F())) terms.push_back(along(term, u, br.conv()));
  return TermProbe(std::move(terms), br.conv().coordinates());
}

TermProbe linearized_probe(const Branch1D& br, const Expr& background, const Expr& sigma) {
  const auto& conv = br.conv();
  const Expr growth = along(br.F_u() * Expr::variable("u_x"), background, conv);
  const Expr speed = along(br.flux_ux(), background, conv);
  std::vector<Expr> terms;
  for (const auto& t : total_derivative_terms(sigma, conv, 0)) terms.push_back(along(t, background, conv));
  terms.push_back(-(growth * along(sigma, background, conv)));
  for (const auto& t : total_derivative_terms(sigma, conv, 1)) terms.push_back(-(speed * along(t, background, conv)));
  return TermProbe(std::move(terms), conv.coordinates());
}

TermProbe linearized_probe(const BranchND& br, const Expr& background, const Expr& sigma) {
  const auto& conv = br.conv();
  std::vector<Expr> terms{along(br.F_u(), background, conv) * along(sigma, background, conv)};
  for (int i = 0; i <= br.n(); ++i) {
    const auto axis = static_cast<std::size_t>(i);
    const Expr coef = along(br.F_ui(axis), background, conv);
    for (const auto& t : total_derivative_terms(sigma, conv, axis)) terms.push_back(coef * along(t, background, conv));
  }
  return TermProbe(std::move(terms), conv.coordinates());
}

TermProbe invariant_probe(const Branch1D& br, const Expr& background, const Expr& phi) {
  const auto& conv = br.conv();
  const Expr speed = along(br.flux_ux(), background, conv);
  std::vector<Expr> terms;
  for (const auto& t : total_derivative_terms(phi, conv, 0)) terms.push_back(along(t, background, conv));
  for (const auto& t : total_derivative_terms(phi, conv, 1)) terms.push_back(-(speed * along(t, background, conv)));
  return TermProbe(std::move(terms), conv.coordinates());
}

TermProbe invariant_probe(const BranchND& br, const Expr& background, const Expr& phi) {
  const auto& conv = br.conv();
  std::vector<Expr> terms;
  for (int i = 0; i <= br.n(); ++i) {
    const auto axis = static_cast<std::size_t>(i);
    const Expr coef = along(br.F_ui(axis), background, conv);
    for (const auto& t : total_derivative_terms(phi, conv, axis)) terms.push_back(coef * along(t, background, conv));
  }
  return TermProbe(std::move(terms), conv.coordinates());
}

Residual pde_residual_1d(const Branch1D& br, const Expr& u, std::span<const double> p) { return pde_probe(br, u)(p); }

Residual pde_residual_nd(const BranchND& br, const Expr& u, std::span<const double> p) { return pde_probe(br, u)(p); }

Residual linearized_residual_1d(const Branch1D& br, const BackgroundSolution& bg, const Expr& sigma,
                                std::span<const double> p) {
  return linearized_probe(br, bg.U(), sigma)(p);
}

Residual linearized_residual_nd(const BranchND& br, const BackgroundSolution& bg, const Expr& sigma,
                                std::span<const double> p) {
  return linearized_probe(br, bg.U(), sigma)(p);
}

}  // namespace pbs

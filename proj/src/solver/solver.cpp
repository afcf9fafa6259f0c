#include "pbs/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>

namespace pbs {

namespace {

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

void require_vars(const Expr& e, const std::vector<std::string>& allowed, const char* what) {
  for (const auto& v : free_variables(e)) {
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw Error(ErrorCode::InvalidArgument,
                  std::string(what) + " uses '" + v + "'; allowed: " + join_names(allowed));
  }
}

// Layout of a jet vector produced by seed_jet/g_jet for m variables.
struct JetView {
  std::span<const double> v;
  std::size_t m;
  double value() const { return v[0]; }
  double d(std::size_t j) const { return v[1 + j]; }
  double d(std::size_t j, std::size_t k) const { return v[1 + m + j * m + k]; }
};

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

// Residual z - T(z) of the primed-point equations with g scaled by lambda,
// and its Jacobian. z, p have m = n + 1 components.
struct PrimedSystem {
  const TransformSpec& ts;
  std::vector<double> p;
  double lambda;

  std::size_t m() const { return ts.dims(); }

  std::vector<double> eta_of(const JetView& U) const {
    if (U.d(0) == 0) throw Error(ErrorCode::U0Zero, "U_0 vanishes at the trial point");
    std::vector<double> eta(m() - 1);
    for (std::size_t a = 1; a < m(); ++a) eta[a - 1] = U.d(a) / U.d(0);
    return eta;
  }

  std::vector<double> residual(std::span<const double> z) const {
    const auto Uv = ts.seed_jet(z);
    const JetView U{Uv, m()};
    const auto eta = eta_of(U);
    const auto gv = ts.g_jet(eta);
    const JetView g{gv, m() - 1};
    std::vector<double> r(m());
    double T0 = p[0] - lambda * g.value();
    for (std::size_t b = 0; b + 1 < m(); ++b) T0 += eta[b] * lambda * g.d(b);
    r[0] = z[0] - T0;
    for (std::size_t a = 1; a < m(); ++a) r[a] = z[a] - (p[a] - lambda * g.d(a - 1));
    return r;
  }

  Eigen::MatrixXd jacobian(std::span<const double> z) const {
    const std::size_t n = m() - 1;
    const auto Uv = ts.seed_jet(z);
    const JetView U{Uv, m()};
    const auto eta = eta_of(U);
    const auto gv = ts.g_jet(eta);
    const JetView g{gv, n};
    // dT/deta: row 0 is sum_b eta_b g_bc, rows a are -g_ac.
    Eigen::MatrixXd dT = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m()), static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0;
      for (std::size_t b = 0; b < n; ++b) s += eta[b] * g.d(b, c);
      dT(0, static_cast<Eigen::Index>(c)) = lambda * s;
      for (std::size_t a = 0; a < n; ++a)
        dT(static_cast<Eigen::Index>(a + 1), static_cast<Eigen::Index>(c)) = -lambda * g.d(a, c);
    }
    const double U0 = U.d(0);
    Eigen::MatrixXd deta(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m()));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t j = 0; j < m(); ++j)
        deta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) =
            (U.d(a + 1, j) * U0 - U.d(a + 1) * U.d(0, j)) / (U0 * U0);
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m()), static_cast<Eigen::Index>(m())) - dT * deta;
  }
};

// 1+1 only: the same system written out as scalars.
struct PrimedSystem2 {
  const TransformSpec& ts;
  double t, x, lambda;

  struct Local {
    double U0, U1, U00, U01, U11, eta, g, g1, g11;
  };

  Local local(std::span<const double> z) const {
    const auto Uv = ts.seed_jet(z);
    Local l{};
    l.U0 = Uv[1];
    l.U1 = Uv[2];
    l.U00 = Uv[3];
    l.U01 = Uv[4];
    l.U11 = Uv[6];
    if (l.U0 == 0) throw Error(ErrorCode::U0Zero, "U_t vanishes at the trial point");
    l.eta = l.U1 / l.U0;
    const std::array<double, 1> e{l.eta};
    const auto gv = ts.g_jet(e);
    l.g = lambda * gv[0];
    l.g1 = lambda * gv[1];
    l.g11 = lambda * gv[2];
    return l;
  }

  std::vector<double> residual(std::span<const double> z) const {
    const Local l = local(z);
    return {z[0] - (t - l.g + l.eta * l.g1), z[1] - (x - l.g1)};
  }

  Eigen::MatrixXd jacobian(std::span<const double> z) const {
    const Local l = local(z);
    const double q = l.U0 * l.U0;
    const double de_dt = (l.U01 * l.U0 - l.U1 * l.U00) / q;
    const double de_dx = (l.U11 * l.U0 - l.U1 * l.U01) / q;
    Eigen::Matrix2d J;
    J << 1 - l.eta * l.g11 * de_dt, -l.eta * l.g11 * de_dx, l.g11 * de_dt, 1 + l.g11 * de_dx;
    return J;
  }
};

bool homotopy_worthy(ErrorCode c) {
  return c == ErrorCode::ConvergenceFailure || c == ErrorCode::SingularJacobian || c == ErrorCode::DomainExit;
}

template <class MakeSystem>
PrimedCoords solve_with_homotopy(const TransformSpec& ts, std::span<const double> p, MakeSystem make) {
  {
    const auto Uv = ts.seed_jet(p);
    if (Uv[1] == 0) throw Error(ErrorCode::U0Zero, "U_0 vanishes at the evaluation point");
  }
  auto run = [&](double lambda, std::vector<double> start) {
    const auto sys = make(lambda);
    return num::newton_solve([&](std::span<const double> z) { return sys.residual(z); },
                             [&](std::span<const double> z) { return sys.jacobian(z); }, std::move(start),
                             ts.newton());
  };
  PrimedCoords out;
  try {
    auto r = run(1.0, to_vec(p));
    out.primed = std::move(r.z);
    out.iterations = r.iterations;
  } catch (const Error& e) {
    if (!homotopy_worthy(e.code())) throw;
    std::vector<double> z = to_vec(p);
    out.iterations = 0;
    out.stages = 4;
    for (double lambda : {0.25, 0.5, 0.75, 1.0}) {
      auto r = run(lambda, z);
      z = std::move(r.z);
      out.iterations += r.iterations;
    }
    out.primed = std::move(z);
  }
  const auto Uv = ts.seed_jet(out.primed);
  for (std::size_t a = 1; a < ts.dims(); ++a) out.eta.push_back(Uv[1 + a] / Uv[1]);
  return out;
}

}  // namespace

std::vector<std::string> eta_names(const JetConvention& conv) {
  if (conv.is_one_plus_one()) return {"eta"};
  std::vector<std::string> out;
  for (int i = 1; i <= conv.spatial_dims(); ++i) out.push_back("eta" + std::to_string(i));
  return out;
}

TransformSpec::TransformSpec(Expr seed, Expr g, JetConvention conv, num::NewtonConfig cfg)
    : seed_(seed, conv), g_(std::move(g)), cfg_(cfg) {
  require_vars(seed, conv.coordinates(), "seed");
  const auto names = eta_names(conv);
  require_vars(g_, names, "g");

  const std::size_t m = conv.axis_count();
  std::vector<Expr> outs{seed_.U()};
  for (std::size_t j = 0; j < m; ++j) outs.push_back(seed_.d(j));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) outs.push_back(seed_.d(j, k));
  seed_program_ = Program(std::move(outs), conv.coordinates());

  std::vector<Expr> gouts{g_};
  std::vector<Expr> first;
  for (const auto& a : names) first.push_back(differentiate(g_, a));
  for (const auto& e : first) gouts.push_back(e);
  for (const auto& e : first)
    for (const auto& b : names) gouts.push_back(differentiate(e, b));
  g_program_ = Program(std::move(gouts), names);
}

std::vector<double> TransformSpec::seed_jet(std::span<const double> p) const { return seed_program_(p); }
std::vector<double> TransformSpec::g_jet(std::span<const double> eta) const { return g_program_(eta); }

PrimedCoords solve_primed_coords_general(const TransformSpec& ts, std::span<const double> p) {
  if (p.size() != ts.dims()) throw Error(ErrorCode::InvalidArgument, "point has the wrong number of coordinates");
  return solve_with_homotopy(ts, p, [&](double lambda) { return PrimedSystem{ts, to_vec(p), lambda}; });
}

PrimedCoords solve_primed_coords(const TransformSpec& ts, std::span<const double> p) {
  if (!ts.conv().is_one_plus_one()) return solve_primed_coords_general(ts, p);
  if (p.size() != 2) throw Error(ErrorCode::InvalidArgument, "point must be (t, x)");
  return solve_with_homotopy(ts, p, [&](double lambda) { return PrimedSystem2{ts, p[0], p[1], lambda}; });
}

double evaluate_pbs(const TransformSpec& ts, std::span<const double> p) {
  const auto pc = solve_primed_coords(ts, p);
  return ts.seed_jet(pc.primed)[0];
}

JacobianReport jacobian_at_primed(const TransformSpec& ts, std::span<const double> primed) {
  if (!ts.conv().is_one_plus_one())
    throw Error(ErrorCode::InvalidArgument, "closed-form jacobian is only available in the 1+1 convention");
  const auto Uv = ts.seed_jet(primed);
  const double U0 = Uv[1], U1 = Uv[2], U00 = Uv[3], U10 = Uv[4], U11 = Uv[6];
  if (U0 == 0) throw Error(ErrorCode::U0Zero, "U_t vanishes at the primed point");
  const std::array<double, 1> eta{U1 / U0};
  const double gee = ts.g_jet(eta)[2];

  JacobianReport r;
  r.primed.primed = to_vec(primed);
  r.primed.eta = {eta[0]};
  const std::array<double, 4> terms{U0 * U0 * U0, U0 * U0 * U11 * gee, U00 * U1 * U1 * gee,
                                    -2 * U0 * U1 * U10 * gee};
  r.delta = terms[0] + terms[1] + terms[2] + terms[3];
  for (double v : terms) r.scale = std::max(r.scale, std::abs(v));
  r.delta1 = (U0 * U10 - U1 * U00) * U1 * gee;
  r.delta2 = (U0 * U11 - U1 * U10) * U1 * gee;
  if (std::abs(r.delta) < 1e-10 * r.scale) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "caustic: delta = " << r.delta << " at primed point (" << primed[0] << ", " << primed[1] << ")";
    throw Error(ErrorCode::Caustic, msg.str());
  }
  r.Delta = terms[0] / r.delta;
  return r;
}

JacobianReport jacobian_delta(const TransformSpec& ts, std::span<const double> p) {
  if (!ts.conv().is_one_plus_one())
    throw Error(ErrorCode::InvalidArgument, "closed-form jacobian is only available in the 1+1 convention");
  const auto pc = solve_primed_coords(ts, p);
  auto r = jacobian_at_primed(ts, pc.primed);
  r.primed = pc;
  return r;
}

double fd_jacobian_determinant(const TransformSpec& ts, std::span<const double> p, double h) {
  const num::VectorFn primed = [&](std::span<const double> q) { return solve_primed_coords(ts, q).primed; };
  return num::fd_jacobian(primed, p, h).determinant();
}

void check_stencil_sheet(const TransformSpec& ts, std::span<const double> p, double h) {
  const auto center = solve_primed_coords(ts, p).primed;
  double size = 1.0;
  for (double v : center) size = std::max(size, std::abs(v));
  for (std::size_t j = 0; j < ts.dims(); ++j) {
    std::array<std::vector<double>, 5> nodes;
    for (int k = -2; k <= 2; ++k) {
      if (k == 0) {
        nodes[2] = center;
        continue;
      }
      std::vector<double> q = to_vec(p);
      q[j] += k * h;
      nodes[static_cast<std::size_t>(k + 2)] = solve_primed_coords(ts, q).primed;
    }
    // A smooth sheet gives second differences of order h^2; a root switch gives O(1).
    for (std::size_t i = 0; i < center.size(); ++i) {
      const double d1 = nodes[3][i] - 2 * nodes[2][i] + nodes[1][i];
      const double d2 = nodes[4][i] - 2 * nodes[2][i] + nodes[0][i];
      if (!(std::abs(d1) <= 1e-6 * size && std::abs(d2) <= 1e-6 * size)) {
        std::ostringstream os;
        os << "primed root changes sheet within the difference stencil along axis " << j;
        throw Error(ErrorCode::Caustic, os.str());
      }
    }
  }
}

std::string degeneracy_diagnosis(const JetConvention& conv) {
  return conv.is_one_plus_one()
             ? "degenerate seed: U_x/U_t is constant on the samples; the transform needs U_x/U_t != constant"
             : "degenerate seed: the map (U_1/U_0, ..., U_n/U_0) has rank < n on the samples; the transform "
               "needs functionally independent ratios";
}

std::vector<double> derivative_transport_check(const TransformSpec& ts, std::span<const double> p, double h) {
  const auto pc = solve_primed_coords(ts, p);
  const auto Uv = ts.seed_jet(pc.primed);
  std::vector<double> out;
  for (std::size_t j = 0; j < ts.dims(); ++j) {
    std::vector<double> q = to_vec(p);
    const double d = num::central_fd5(
        [&](double s) {
          q[j] = s;
          return evaluate_pbs(ts, q);
        },
        p[j], h);
    out.push_back(std::abs(d - Uv[1 + j]));
  }
  return out;
}

bool detect_degenerate_seed(const Expr& seed, const JetConvention& conv,
                            const std::vector<std::vector<double>>& samples) {
  const BackgroundSolution bg(seed, conv);
  const std::size_t m = conv.axis_count();
  std::vector<Expr> firsts;
  for (std::size_t j = 0; j < m; ++j) firsts.push_back(bg.d(j));
  const Program grad(firsts, conv.coordinates());
  const num::VectorFn eta_map = [&](std::span<const double> q) {
    const auto g = grad(q);
    if (g[0] == 0 || !std::isfinite(g[0])) throw Error(ErrorCode::U0Zero, "U_0 vanishes");
    std::vector<double> eta(m - 1);
    for (std::size_t a = 1; a < m; ++a) eta[a - 1] = g[a] / g[0];
    return eta;
  };

  std::size_t used = 0;
  for (const auto& p : samples) {
    Eigen::MatrixXd J;
    try {
      if (p.size() != m) throw Error(ErrorCode::InvalidArgument, "sample has the wrong number of coordinates");
      double h = 1e-6;
      for (double v : p) h = std::max(h, 1e-6 * std::abs(v));
      J = num::fd_jacobian(eta_map, p, h);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidArgument) throw;
      continue;
    }
    if (!J.allFinite()) continue;
    ++used;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s.maxCoeff() : 0.0;
    const double smin = s.size() ? s(s.size() - 1) : 0.0;
    if (smin > 1e-8 * std::max(1.0, smax)) return false;
  }
  if (used == 0) throw Error(ErrorCode::Domain, "seed is undefined at every degeneracy sample");
  return true;
}

FdResidual::FdResidual(const Branch1D& br) : evolution_(true), axes_(2) {
  const auto& conv = br.conv();
  std::vector<Expr> terms{Expr::variable(conv.first_order_name(0))};
  for (const auto& t : additive_terms(br.rhs())) terms.push_back(-t);
  terms_ = Program(terms, {"u", conv.first_order_name(0), conv.first_order_name(1)});
}

FdResidual::FdResidual(const BranchND& br) : evolution_(false), axes_(br.conv().axis_count()) {
  std::vector<std::string> inputs{"u"};
  for (std::size_t j = 0; j < axes_; ++j) inputs.push_back(br.conv().first_order_name(j));
  terms_ = Program(additive_terms(br.F()), inputs);
}

Residual FdResidual::operator()(const num::PointFn& u, std::span<const double> p, double h) const {
  if (p.size() != axes_) throw Error(ErrorCode::InvalidArgument, "point has the wrong number of coordinates");
  std::vector<double> in{u(p)};
  std::vector<double> q = to_vec(p);
  for (std::size_t j = 0; j < axes_; ++j) {
    in.push_back(num::central_fd5(
        [&](double s) {
          q[j] = s;
          return u(q);
        },
        p[j], h));
    q[j] = p[j];
  }
  Residual r;
  for (double v : terms_(in)) {
    r.value += v;
    r.scale = std::max(r.scale, std::abs(v));
  }
  return r;
}

Type2Spec::Type2Spec(Expr Y, double lo, double hi, double a, num::NewtonConfig cfg)
    : Y_expr_(std::move(Y)), lo_(lo), hi_(hi), a_(a), cfg_(cfg) {
  require_vars(Y_expr_, {"y"}, "Y");
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "Y interval must have lo < hi");
  Y_ = Program({Y_expr_}, {"y"});
  dY_ = Program({differentiate(Y_expr_, "y")}, {"y"});
  constexpr int kSamples = 64;
  int sign = 0;
  for (int i = 1; i < kSamples; ++i) {
    const double y = lo + (hi - lo) * i / kSamples;
    const std::array<double, 1> in{y};
    const double d = dY_.scalar(in);
    const int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign))
      throw Error(ErrorCode::InvalidArgument, "Y is not strictly monotone on the interval");
    sign = s;
  }
}

double Type2Spec::Y(double y) const {
  const std::array<double, 1> in{y};
  return Y_.scalar(in);
}

double Type2Spec::S(double y) const {
  const std::array<double, 1> in{y};
  const double d = dY_.scalar(in);
  if (d == 0) throw Error(ErrorCode::Domain, "S = 1/Y' is undefined where Y' = 0");
  return 1 / d;
}

double Type2Spec::Y_inverse(double z) const {
  const double ylo = Y(lo_), yhi = Y(hi_);
  if (z == ylo) return lo_;
  if (z == yhi) return hi_;
  if (z < std::min(ylo, yhi) || z > std::max(ylo, yhi)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Y inverse: " << z << " is outside Y([" << lo_ << ", " << hi_ << "])";
    throw Error(ErrorCode::Domain, msg.str());
  }
  return num::bisect([&](double y) { return Y(y) - z; }, lo_, hi_);
}

namespace {

struct Type2Eval {
  double residual;
  double u;
};

Type2Eval type2_eval(const Type2Spec& t2, double xi, double x, double t) {
  const auto [lo, hi] = t2.interval();
  const double w = -xi - 2 * t;
  if (w < lo || w > hi) throw Error(ErrorCode::Domain, "-xi - 2t is outside the Y interval");
  if (2 * xi + 2 * t < 0) throw Error(ErrorCode::Domain, "2 xi + 2t is negative");
  const double yi = t2.Y_inverse(t2.a() + t2.Y(w));
  const double ratio = t2.S(yi) / t2.S(w);
  return {2 * (xi + t) * ratio + yi - x, ratio * std::sqrt(2 * xi + 2 * t)};
}

}  // namespace

Type2Point solve_type2(const Type2Spec& t2, double x, double t) {
  auto h = [&](double xi) { return type2_eval(t2, xi, x, t).residual; };
  double xi = 0;
  bool found = false;
  try {
    num::NewtonConfig cfg = t2.newton();
    cfg.bracket.reset();
    xi = num::solve_scalar(h, {}, x, cfg).z;
    found = true;
  } catch (const Error&) {
  }
  if (!found) {
    const auto [lo, hi] = t2.interval();
    const double a = std::max(-t, -2 * t - hi);
    const double b = -2 * t - lo;
    constexpr int kScan = 400;
    std::optional<std::pair<double, double>> prev;
    for (int i = 0; i <= kScan && !found; ++i) {
      const double s = a + (b - a) * i / kScan;
      double v = 0;
      try {
        v = h(s);
      } catch (const Error&) {
        prev.reset();
        continue;
      }
      if (v == 0) {
        xi = s;
        found = true;
      } else if (prev && (prev->second < 0) != (v < 0)) {
        xi = num::bisect(h, prev->first, s);
        found = true;
      }
      prev = std::pair{s, v};
    }
  }
  if (!found) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "type-2 transform: no root for xi at (x, t) = (" << x << ", " << t << ")";
    throw Error(ErrorCode::BracketFailure, msg.str());
  }
  return {xi, type2_eval(t2, xi, x, t).u};
}

double evaluate_type2_pbs(const Type2Spec& t2, double x, double t) { return solve_type2(t2, x, t).u; }

}  // namespace pbs

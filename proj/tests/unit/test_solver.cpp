#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pbs/error.hpp"
#include "pbs/parser.hpp"
#include "pbs/solver.hpp"

using namespace pbs;

namespace {

const auto kConv1 = JetConvention::one_plus_one();
const Branch1D toy{parse("u*u_x")};

std::vector<std::vector<double>> box(std::uint64_t seed, int count, std::vector<std::pair<double, double>> ranges) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> p;
    for (auto [lo, hi] : ranges) p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
    out.push_back(p);
  }
  return out;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("toy transform with g = eta^2 at the reference point") {
  const TransformSpec ts(parse("x/sqrt(-2*t)"), parse("eta^2"), kConv1);
  const std::vector<double> p{-0.1, 1.0};
  const auto pc = solve_primed_coords(ts, p);
  CHECK(pc.primed[0] == doctest::Approx(-0.06).epsilon(1e-12));
  CHECK(pc.primed[1] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(std::abs(evaluate_pbs(ts, p) - std::sqrt(3.0)) < 1e-12);
  // Hand-computed: det d(t', x')/d(t, x) = 1 + 4t/x^2.
  const auto jr = jacobian_delta(ts, p);
  CHECK(std::abs(jr.Delta - 0.6) < 1e-10);
}

TEST_CASE("toy transform matches the closed form on its grid") {
  const TransformSpec ts(parse("x/sqrt(-2*t)"), parse("eta^2"), kConv1);
  for (const auto& p : box(3, 200, {{-0.2, -0.05}, {2, 3}})) {
    const double exact = std::sqrt(-2 - p[1] * p[1] / (2 * p[0]));
    CHECK(std::abs(evaluate_pbs(ts, p) - exact) <= 1e-10 * exact);
  }
}

TEST_CASE("g = 0 is the identity and g = c shifts time") {
  const Expr U = parse("x/sqrt(-2*t)");
  const TransformSpec id(U, Expr::constant(0), kConv1);
  const TransformSpec shift(U, Expr::constant(0.05), kConv1);
  const Program Up({U}, {"t", "x"});
  for (const auto& p : box(5, 50, {{-1, -0.1}, {0.5, 2}})) {
    const auto pc = solve_primed_coords(id, p);
    CHECK(pc.primed == p);
    CHECK(evaluate_pbs(id, p) == Up.scalar(p));
    const auto ps = solve_primed_coords(shift, p);
    CHECK(std::abs(ps.primed[0] - (p[0] - 0.05)) < 1e-15);
    CHECK(ps.primed[1] == p[1]);
  }
}

TEST_CASE("constant transforms compose additively") {
  const Expr U = parse("x/sqrt(-2*t)");
  const double c1 = 0.03, c2 = 0.07;
  const TransformSpec first(U, Expr::constant(c1), kConv1);
  const Expr shifted = substitute(U, {{"t", Expr::variable("t") - c1}});
  const TransformSpec second(shifted, Expr::constant(c2), kConv1);
  const TransformSpec both(U, Expr::constant(c1 + c2), kConv1);
  for (const auto& p : box(7, 50, {{-1, -0.2}, {0.5, 2}})) {
    const double a = evaluate_pbs(second, p);
    const double b = evaluate_pbs(both, p);
    CHECK(std::abs(a - b) <= 1e-13 * std::abs(b));
    // The intermediate field is the first transform itself.
    const std::vector<double> q{p[0] - c2, p[1]};
    CHECK(std::abs(evaluate_pbs(first, q) - a) <= 1e-13 * std::abs(a));
  }
}

TEST_CASE("closed-form jacobian agrees with finite differences") {
  for (const char* g : {"eta^2", "eta^3", "sin(eta)", "0.3*eta^2 - eta"}) {
    CAPTURE(g);
    const TransformSpec ts(parse("x/sqrt(-2*t)"), parse(g), kConv1);
    for (const auto& p : box(11, 20, {{-0.5, -0.1}, {1.5, 3}})) {
      const auto jr = jacobian_delta(ts, p);
      const double fd = fd_jacobian_determinant(ts, p);
      CHECK(std::abs(jr.Delta - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      CHECK(std::isfinite(jr.delta1));
      CHECK(std::isfinite(jr.delta2));
    }
  }
}

TEST_CASE("caustic is reported") {
  // For this seed delta = x s^-9/2 (x^2 + 2 c s), s = -2t, when g = c eta^2.
  const TransformSpec ts(parse("x/sqrt(-2*t)"), parse("-eta^2"), kConv1);
  const std::vector<double> primed{-0.25, 1.0};
  CHECK(code_of([&] { jacobian_at_primed(ts, primed); }) == ErrorCode::Caustic);
}

TEST_CASE("root sheet changes inside the stencil are caught") {
  // Near a fold of the eikonal transform the neighbouring nodes pick another root.
  const TransformSpec ts(parse("sqrt(x0^2 + x1^2)"), parse("sin(eta1)"), JetConvention::n_plus_one(1));
  const std::vector<double> p{1.2222222222222223, 1.0555555555555556};
  CHECK(code_of([&] { check_stencil_sheet(ts, p); }) == ErrorCode::Caustic);
  CHECK_NOTHROW(check_stencil_sheet(ts, std::vector<double>{1.5, 0.7}));

  const TransformSpec toy_ts(parse("x/sqrt(-2*t)"), parse("eta^2"), kConv1);
  for (const auto& q : box(11, 50, {{-0.2, -0.05}, {2, 3}})) CHECK_NOTHROW(check_stencil_sheet(toy_ts, q));
}

TEST_CASE("first derivatives are transported to the primed point") {
  const TransformSpec ts(parse("x/sqrt(-2*t)"), parse("eta^2 + sin(eta)"), kConv1);
  for (const auto& p : box(13, 20, {{-0.2, -0.05}, {2, 3}}))
    for (double gap : derivative_transport_check(ts, p)) CHECK(gap < 1e-6);

  const auto c2 = JetConvention::n_plus_one(2);
  const TransformSpec nd(parse("sqrt(x0^2 + x1^2 + x2^2)"), parse("eta1^2 + eta2^2"), c2);
  for (const auto& p : box(14, 10, {{1, 2}, {0.5, 1.5}, {0.2, 0.7}}))
    for (double gap : derivative_transport_check(nd, p)) CHECK(gap < 1e-6);
}

TEST_CASE("transformed fields solve the equation") {
  const FdResidual toy_res(toy);
  for (const char* g : {"eta^2", "eta^3", "sin(eta)"}) {
    CAPTURE(g);
    const TransformSpec ts(parse("x/sqrt(-2*t)"), parse(g), kConv1);
    const num::PointFn u = [&](std::span<const double> q) { return evaluate_pbs(ts, q); };
    for (const auto& p : box(17, 20, {{-0.2, -0.05}, {2, 3}})) CHECK(toy_res(u, p).passes(1e-6));
  }
}

TEST_CASE("n-dimensional transforms solve the equation") {
  const BranchND eik2(1, parse("u_x0^2 + u_x1^2 - 1"));
  const TransformSpec t2(parse("sqrt(x0^2 + x1^2)"), parse("eta1^2 + eta1^3"), JetConvention::n_plus_one(1));
  const FdResidual r2(eik2);
  for (const auto& p : box(19, 20, {{1, 2}, {0.5, 1.5}}))
    CHECK(r2([&](std::span<const double> q) { return evaluate_pbs(t2, q); }, p).passes(1e-6));

  const BranchND eik3(2, parse("u_x0^2 + u_x1^2 + u_x2^2 - 1"));
  const TransformSpec t3(parse("sqrt(x0^2 + x1^2 + x2^2)"), parse("eta1^2 + sin(eta2)"),
                         JetConvention::n_plus_one(2));
  const FdResidual r3(eik3);
  for (const auto& p : box(23, 20, {{1, 2}, {0.5, 1.5}, {0.2, 0.7}}))
    CHECK(r3([&](std::span<const double> q) { return evaluate_pbs(t3, q); }, p).passes(1e-6));
}

TEST_CASE("general path agrees with the dedicated 2x2 path") {
  const TransformSpec ts(parse("x/sqrt(-2*t)"), parse("eta^2 + sin(eta)"), kConv1);
  const TransformSpec nd(parse("x1/sqrt(-2*x0)"), parse("eta1^2 + sin(eta1)"), JetConvention::n_plus_one(1));
  for (const auto& p : box(29, 100, {{-0.2, -0.05}, {2, 3}})) {
    const auto a = solve_primed_coords(ts, p);
    const auto b = solve_primed_coords_general(ts, p);
    const auto c = solve_primed_coords(nd, p);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(std::abs(a.primed[j] - b.primed[j]) <= 1e-10 * std::max(1.0, std::abs(a.primed[j])));
      CHECK(std::abs(a.primed[j] - c.primed[j]) <= 1e-10 * std::max(1.0, std::abs(a.primed[j])));
    }
    CHECK(std::abs(evaluate_pbs(ts, p) - evaluate_pbs(nd, p)) <= 1e-10 * std::abs(evaluate_pbs(ts, p)));
  }
}

TEST_CASE("homotopy reaches the same root as the direct solve") {
  const TransformSpec ts(parse("x/sqrt(-2*t)"), parse("eta^2"), kConv1);
  const std::vector<double> p{-0.2, 2.2};
  const auto direct = solve_primed_coords(ts, p);
  CHECK(direct.stages == 1);
  // The direct solve fails here; the staged one lands on a root.
  const TransformSpec hard(parse("x/sqrt(-2*t)"), parse("sin(4*eta)"), kConv1);
  const std::vector<double> q{-1.0, 3.0};
  const auto pc = solve_primed_coords(hard, q);
  CHECK(pc.stages == 4);
  const double eta = pc.eta[0];
  CHECK(std::abs(pc.primed[0] - (q[0] - std::sin(4 * eta) + eta * 4 * std::cos(4 * eta))) < 1e-10);
  CHECK(std::abs(pc.primed[1] - (q[1] - 4 * std::cos(4 * eta))) < 1e-10);
  const auto gen = solve_primed_coords_general(hard, q);
  CHECK(std::abs(gen.primed[0] - pc.primed[0]) < 1e-10);
  CHECK(std::abs(gen.primed[1] - pc.primed[1]) < 1e-10);
}

TEST_CASE("solver errors") {
  CHECK(code_of([] { TransformSpec(parse("x/sqrt(-2*t)"), parse("x*eta"), kConv1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { TransformSpec(parse("x/sqrt(-2*t)"), parse("eta1"), kConv1); }) == ErrorCode::InvalidArgument);
  const TransformSpec ts(parse("x/sqrt(-2*t)"), parse("eta^2"), kConv1);
  CHECK(code_of([&] { evaluate_pbs(ts, std::vector<double>{-0.1, 0.0}); }) == ErrorCode::U0Zero);
  CHECK(code_of([&] { evaluate_pbs(ts, std::vector<double>{-0.1}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] {
          const TransformSpec nd(parse("x1"), parse("eta1^2"), JetConvention::n_plus_one(1));
          jacobian_delta(nd, std::vector<double>{1, 1});
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("degenerate seeds are detected") {
  const auto samples2 = box(31, 8, {{0.1, 1}, {0.5, 2}});
  CHECK(detect_degenerate_seed(parse("sqrt(2*(x + t))"), kConv1, samples2));
  CHECK_FALSE(detect_degenerate_seed(parse("x/sqrt(-2*t)"), kConv1, box(32, 8, {{-1, -0.1}, {0.5, 2}})));

  const auto c1 = JetConvention::n_plus_one(1);
  CHECK(detect_degenerate_seed(parse("0.6*x0 + 0.8*x1"), c1, samples2));
  CHECK_FALSE(detect_degenerate_seed(parse("sqrt(x0^2 + x1^2)"), c1, samples2));

  const auto c2 = JetConvention::n_plus_one(2);
  const auto samples3 = box(33, 8, {{1, 2}, {0.5, 1.5}, {0.2, 0.7}});
  CHECK_FALSE(detect_degenerate_seed(parse("sqrt(x0^2 + x1^2 + x2^2)"), c2, samples3));
  CHECK(detect_degenerate_seed(parse("0.6*x0 + 0.8*x1"), c2, samples3));
  // Rank 1 out of 2 is still degenerate.
  CHECK(detect_degenerate_seed(parse("x0 + x1^2 + 2*x1*x2 + x2^2"), c2, samples3));

  CHECK(code_of([] {
          detect_degenerate_seed(parse("sqrt(x - 10)"), kConv1, {{0, 0}, {1, 1}});
        }) == ErrorCode::Domain);
}

TEST_CASE("finite-difference residual on exact solutions") {
  const Program closed({parse("sqrt(-2 - x^2/(2*t))")}, {"t", "x"});
  const FdResidual r(toy);
  for (const auto& p : box(37, 50, {{-0.2, -0.05}, {2, 3}})) {
    const auto res = r([&](std::span<const double> q) { return closed.scalar(q); }, p);
    CHECK(res.passes(1e-7));
    CHECK(res.scale > 0);
  }
  // A non-solution fails.
  const Program wrong({parse("x/sqrt(-3*t)")}, {"t", "x"});
  CHECK_FALSE(r([&](std::span<const double> q) { return wrong.scalar(q); }, std::vector<double>{-0.5, 1}).passes(1e-3));
}

TEST_CASE("type-2 transform with Y = sin") {
  const double half_pi = std::numbers::pi / 2;
  const Type2Spec t2(parse("sin(y)"), -half_pi, half_pi, 0.3);
  const FdResidual r(toy);
  // Residual is checked in (t, x) order.
  const num::PointFn u = [&](std::span<const double> q) { return evaluate_type2_pbs(t2, q[1], q[0]); };
  for (const auto& p : box(41, 40, {{0.02, 0.1}, {0.32, 0.55}})) {
    const double t = p[0], x = p[1];
    const auto sol = solve_type2(t2, x, t);
    const double w = -sol.xi - 2 * t;
    const double yi = std::asin(0.3 + std::sin(w));
    const double ratio = std::cos(w) / std::cos(yi);
    CHECK(std::abs(2 * (sol.xi + t) * ratio + yi - x) < 1e-12);
    CHECK(std::abs(sol.u - ratio * std::sqrt(2 * sol.xi + 2 * t)) <= 1e-12 * sol.u);
    CHECK(r(u, p).passes(1e-6));
  }
  CHECK(code_of([&] { evaluate_type2_pbs(t2, 1.0, 0.1); }) == ErrorCode::BracketFailure);
}

TEST_CASE("type-2 with a = 0 recovers the travelling seed") {
  const double half_pi = std::numbers::pi / 2;
  const Type2Spec t2(parse("sin(y)"), -half_pi, half_pi, 0.0);
  for (const auto& p : box(43, 40, {{0.02, 0.1}, {0.0, 0.6}})) {
    const double t = p[0], x = p[1];
    const auto sol = solve_type2(t2, x, t);
    CHECK(std::abs(sol.xi - x) < 1e-12);
    CHECK(std::abs(sol.u - std::sqrt(2 * x + 2 * t)) <= 1e-12 * sol.u);
  }
}

TEST_CASE("type-2 argument checks") {
  CHECK(code_of([] { Type2Spec(parse("y^2"), -1, 1, 0.1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Type2Spec(parse("sin(x)"), -1, 1, 0.1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Type2Spec(parse("y"), 1, -1, 0.1); }) == ErrorCode::InvalidArgument);
  const Type2Spec t2(parse("y^3 + y"), -1, 1, 0.1);
  CHECK(std::abs(t2.Y_inverse(t2.Y(0.37)) - 0.37) < 1e-14);
  CHECK(code_of([&] { t2.Y_inverse(5.0); }) == ErrorCode::Domain);
}

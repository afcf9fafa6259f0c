#include <doctest.h>

#include <cmath>
#include <random>

#include "pbs/branch.hpp"
#include "pbs/error.hpp"
#include "pbs/parser.hpp"

using namespace pbs;

namespace {

const Branch1D toy{parse("u*u_x")};
const Expr toy_seed = parse("x/sqrt(-2*t)");

std::vector<std::vector<double>> toy_points(int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t(-1.0, -0.1), x(0.5, 2.0);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) pts.push_back({t(rng), x(rng)});
  return pts;
}

}  // namespace

TEST_CASE("branch partials are cached derivatives") {
  const Bindings b{{"u", 1.7}, {"u_x", -0.3}};
  CHECK(evaluate(toy.F_u(), b) == doctest::Approx(-0.3));
  CHECK(evaluate(toy.F_ux(), b) == doctest::Approx(1.7));
  CHECK(evaluate(toy.flux_ux(), b) == doctest::Approx(2 * 1.7 * -0.3));
  CHECK_THROWS_AS(Branch1D(parse("u*x")), Error);
  CHECK_THROWS_AS(BranchND(1, parse("u_x0 + x1")), Error);
  CHECK_THROWS_AS(BranchND(0, parse("u")), Error);
}

TEST_CASE("pde residual 1+1") {
  const std::vector<double> p{-0.5, 1};
  CHECK(std::abs(pde_residual_1d(toy, toy_seed, p).value) < 1e-12);
  const Branch1D hopf(parse("u"));
  CHECK(std::abs(pde_residual_1d(hopf, parse("x/(1-t)"), std::vector<double>{0, 2}).value) < 1e-12);
  CHECK(pde_residual_1d(toy, parse("5"), p).value == 0);
  CHECK(pde_residual_1d(hopf, parse("5"), p).value == 0);
  CHECK(!pde_residual_1d(toy, parse("x"), p).passes(1e-6));
  CHECK_THROWS_AS(pde_residual_1d(toy, toy_seed, std::vector<double>{0.5, 1}), Error);
}

TEST_CASE("pde residual n+1") {
  const BranchND gam3(2, parse("u_x0^2 + u_x1^2 + u_x2^2 - 1"));
  CHECK(std::abs(pde_residual_nd(gam3, parse("sqrt(x0^2+x1^2+x2^2)"), std::vector<double>{1, 1, 1}).value) < 1e-14);
  const BranchND gam2(1, parse("u_x0^2 + u_x1^2 - 1"));
  CHECK(std::abs(pde_residual_nd(gam2, parse("0.6*x0 + 0.8*x1"), std::vector<double>{0.3, 2}).value) < 1e-15);
  CHECK(pde_residual_nd(gam2, parse("x0*x1"), std::vector<double>{1, 1}).value == doctest::Approx(1.0));

  // The n = 1 rewrite of a 1+1 branch has the same solutions.
  const BranchND toy_nd = toy.as_nd();
  CHECK(std::abs(pde_residual_nd(toy_nd, parse("x1/sqrt(-2*x0)"), std::vector<double>{-0.5, 1}).value) < 1e-12);
}

TEST_CASE("background validation") {
  CHECK_NOTHROW(BackgroundSolution::checked(toy_seed, toy, toy_points(10, 1)));
  CHECK_THROWS_AS(BackgroundSolution::checked(parse("x*t"), toy, toy_points(3, 1)), Error);
  const BackgroundSolution bg(toy_seed, toy.conv());
  CHECK(evaluate(bg.d(1, 0), bg.bind(std::vector<double>{-0.5, 1})) ==
        doctest::Approx(evaluate(bg.d(0, 1), bg.bind(std::vector<double>{-0.5, 1}))));
}

TEST_CASE("linearized residual 1+1") {
  const BackgroundSolution bg(toy_seed, toy.conv());
  const BackgroundSolution closed(parse("sqrt(-2 - x^2/(2*t))"), toy.conv());
  for (const auto& p : toy_points(20, 2)) {
    CHECK(linearized_residual_1d(toy, bg, parse("u_x"), p).passes(1e-12));
    CHECK(linearized_residual_1d(toy, bg, parse("(u_x/u_t)^3*u_t"), p).passes(1e-12));
    CHECK(std::abs(linearized_residual_1d(toy, bg, parse("x*u"), p).value) > 1e-6);
  }
  for (const auto& p : std::vector<std::vector<double>>{{-0.1, 2}, {-0.2, 2.5}}) {
    CHECK(linearized_residual_1d(toy, closed, parse("u_t"), p).passes(1e-12));
    CHECK(linearized_residual_1d(toy, closed, parse("u_x"), p).passes(1e-12));
  }
}

TEST_CASE("linearized residual n+1") {
  const BranchND gam3(2, parse("u_x0^2 + u_x1^2 + u_x2^2 - 1"));
  const BackgroundSolution radial(parse("sqrt(x0^2+x1^2+x2^2)"), gam3.conv());
  const std::vector<std::vector<double>> pts{{1, 1, 1}, {1.5, 0.7, -0.4}, {0.3, 2, 1}};
  for (const auto& p : pts) {
    for (const char* s : {"u_x0", "u_x1", "u_x2"}) CHECK(linearized_residual_nd(gam3, radial, parse(s), p).passes(1e-14));
    CHECK(linearized_residual_nd(gam3, radial, parse("(u_x1/u_x0)*(u_x2/u_x0)*u_x0"), p).passes(1e-13));
  }
  const BranchND gam2(1, parse("u_x0^2 + u_x1^2 - 1"));
  const BackgroundSolution linear(parse("0.6*x0 + 0.8*x1"), gam2.conv());
  CHECK(linearized_residual_nd(gam2, linear, parse("u"), std::vector<double>{0.5, 0.5}).value == doctest::Approx(2.0));
}

TEST_CASE("property: invariant times symmetry is a symmetry") {
  // On the seed itself x - u/u_x and 2t + u_x^-2 vanish identically, so use
  // the transformed solution, where all three invariants are non-trivial.
  const BackgroundSolution bg(parse("sqrt(-2 - x^2/(2*t))"), toy.conv());
  const std::vector<std::string> invariants{"u_x/u_t", "x - u/u_x", "2*t + u_x^(-2)"};
  const std::vector<std::string> symmetries{"u_x", "u_t", "(u_x/u_t)^3*u_t"};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(-0.2, -0.05), x(2.0, 3.0);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 100; ++i) pts.push_back({t(rng), x(rng)});
  for (const auto& phi : invariants) {
    for (const auto& sigma : symmetries) {
      const TermProbe probe = linearized_probe(toy, bg.U(), parse(phi) * parse(sigma));
      for (const auto& p : pts) CHECK(probe(p).passes(1e-9));
    }
  }
}

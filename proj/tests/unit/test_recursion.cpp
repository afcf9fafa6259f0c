#include <doctest.h>

#include <cmath>
#include <random>

#include "pbs/error.hpp"
#include "pbs/jet.hpp"
#include "pbs/parser.hpp"
#include "pbs/recursion.hpp"

using namespace pbs;

namespace {

const Branch1D toy{parse("u*u_x")};
const char* kNontrivialG = "u*u_x + u_x^(-2)/2";

struct Bg {
  Expr U;
  std::vector<std::vector<double>> pts;
};

std::vector<Bg> toy_backgrounds(int count) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> t1(-1, -0.1), x1(0.5, 2), t2(-0.2, -0.05), x2(2, 3);
  Bg seed{parse("x/sqrt(-2*t)"), {}}, closed{parse("sqrt(-2 - x^2/(2*t))"), {}};
  for (int i = 0; i < count; ++i) {
    seed.pts.push_back({t1(rng), x1(rng)});
    closed.pts.push_back({t2(rng), x2(rng)});
  }
  return {seed, closed};
}

Expr poly(std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<double> c(-1, 1);
  const Expr x = Expr::variable("x");
  Expr p = Expr::constant(c(rng));
  for (int k = 1; k <= degree; ++k) p = p + c(rng) * pow(x, static_cast<double>(k));
  return p;
}

template <class F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("recursion spec infers c") {
  CHECK(RecursionSpec(toy, toy.F()).c() == 0);
  CHECK(RecursionSpec(toy, parse(kNontrivialG)).c() == doctest::Approx(1.0));
  CHECK(RecursionSpec(toy, parse("u*u_x - 3*u_x^(-2)")).c() == doctest::Approx(-6.0));
  CHECK(code_of([] { RecursionSpec(toy, parse("u^2")); }) == ErrorCode::ValidationFailure);
}

TEST_CASE("apply_recursion") {
  const RecursionSpec rs(toy, toy.F());
  const Expr trivial = apply_recursion(rs, parse("u_x"));
  for (double uxx : {-0.3, 0.0, 1.7}) CHECK(evaluate(trivial, {{"u", 1.2}, {"u_x", 0.8}, {"u_xx", uxx}}) == 0);
  const Expr phi_ut = apply_recursion(rs, parse("u_t"));
  for (const auto& [U, pts] : toy_backgrounds(30))
    for (const auto& p : pts) CHECK(linearized_probe(toy, U, phi_ut)(p).passes(1e-9));
  CHECK(code_of([&] { apply_recursion(rs, parse("u_xxxx")); }) == ErrorCode::JetOrderOverflow);
}

TEST_CASE("property: Phi maps symmetries to symmetries") {
  for (const char* G : {"u*u_x", kNontrivialG}) {
    const RecursionSpec rs(toy, parse(G));
    for (const auto& sigma : {parse("u_x"), parse("u_t"), toy.rhs()}) {
      const Expr image = apply_recursion(rs, sigma);
      for (const auto& [U, pts] : toy_backgrounds(20)) {
        const auto base = linearized_probe(toy, U, sigma);
        const auto mapped = linearized_probe(toy, U, image);
        for (const auto& p : pts) {
          REQUIRE(base(p).passes(1e-10));
          CHECK(mapped(p).passes(1e-9));
        }
      }
    }
  }
}

TEST_CASE("hierarchy") {
  const RecursionSpec rs(toy, parse(kNontrivialG));
  const auto K0 = hierarchy(rs, 0);
  REQUIRE(K0.size() == 1);
  CHECK(structurally_equal(K0[0], toy.rhs()));

  const auto K = hierarchy(rs, 2);
  REQUIRE(K.size() == 3);
  CHECK(jet_order(K[1], toy.conv()) == 2);
  CHECK(jet_order(K[2], toy.conv()) == 3);
  for (const auto& [U, pts] : toy_backgrounds(50)) {
    for (std::size_t m = 1; m < K.size(); ++m) {
      const auto probe = linearized_probe(toy, U, K[m]);
      for (const auto& p : pts) CHECK(probe(p).passes(1e-8));
    }
  }
  CHECK(code_of([&] { hierarchy(rs, 10); }) == ErrorCode::JetOrderOverflow);

  // With G = F the first step is the trivial translation u_x.
  const auto trivial = hierarchy(RecursionSpec(toy, toy.F()), 1);
  const Bindings jets{{"u", 1.3}, {"u_x", 0.7}, {"u_xx", -0.4}};
  CHECK(evaluate(trivial[1], jets) == doctest::Approx(0.7));
}

TEST_CASE("property: hereditary identity") {
  for (const char* G : {"u*u_x", kNontrivialG}) {
    const RecursionSpec rs(toy, parse(G));
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> xs(-1, 1);
    int trials = 0;
    while (trials < 100) {
      const Expr f = poly(rng, 3), g = poly(rng, 3), u = poly(rng, 3);
      const double at = xs(rng);
      const Bindings b{{"x", at}};
      const double ux = evaluate(differentiate(u, "x"), b);
      if (std::abs(ux) < 0.1) continue;
      double g1 = 0;
      try {
        g1 = evaluate(along(rs.G1(), u, toy.conv()), b);
      } catch (const Error&) {
        continue;
      }
      if (std::abs(g1) < 0.1) continue;
      ++trials;
      const Residual r = hereditary_residual(rs, f, g, u, at);
      INFO("G = " << G << ", f = " << to_string(f) << ", g = " << to_string(g) << ", u = " << to_string(u));
      CHECK(r.passes(1e-9));
      CHECK(hereditary_residual(rs, f, f, u, at).value == 0);
      CHECK(hereditary_residual(rs, g, f, u, at).value == -r.value);
    }
  }
}

TEST_CASE("property: hierarchy flows commute") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-1, 1), mag(0.5, 1.5);
  // G = F is left out: there K_1 = u_x and K_2 = 0, so the bracket is pure
  // roundoff with no scale to compare it against.
  {
    const RecursionSpec rs(toy, parse(kNontrivialG));
    const auto K = hierarchy(rs, 2);
    int done = 0;
    while (done < 20) {
      // Taylor profile around x = 0 with random jet values.
      Expr u = Expr::constant(mag(rng));
      const Expr x = Expr::variable("x");
      u = u + mag(rng) * x;
      double fact = 1;
      for (int k = 2; k <= 7; ++k) {
        fact *= k;
        u = u + (c(rng) / fact) * pow(x, static_cast<double>(k));
      }
      Residual r;
      try {
        r = frechet_commutator(K[1], K[2], u, toy.conv(), 0.0);
      } catch (const Error&) {
        continue;
      }
      ++done;
      CHECK(r.passes(1e-8));
    }
  }
}

TEST_CASE("seeded trial batches") {
  for (const char* G : {"u*u_x", kNontrivialG}) {
    CAPTURE(G);
    const RecursionSpec rs(toy, parse(G));
    const auto a = hereditary_trials(rs, 100, 42, 1e-9);
    CHECK(a.trials == 100);
    CHECK(a.failures == 0);
    CHECK(a.diagonal_zero);
    const auto b = hereditary_trials(rs, 100, 42, 1e-9);
    CHECK(a.max_relative == b.max_relative);
    CHECK(a.skipped == b.skipped);
  }
  const RecursionSpec rs(toy, parse(kNontrivialG));
  const auto K = hierarchy(rs, 2);
  const auto c = commutator_trials(K[1], K[2], toy.conv(), 20, 0, 1e-8);
  CHECK(c.trials == 20);
  CHECK(c.failures == 0);
  CHECK(c.max_relative < 1e-8);
}

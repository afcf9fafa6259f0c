#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "pbs/catalog.hpp"
#include "pbs/error.hpp"
#include "pbs/parser.hpp"

using namespace pbs;
using json = nlohmann::ordered_json;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

json toy_json() { return entry_to_json(catalog::get("toy")); }

}  // namespace

TEST_CASE("built-in entries load") {
  const auto names = catalog::names();
  CHECK(names == std::vector<std::string>{"toy", "hopf", "hopf_damped", "ghopf", "cylsurf", "gam2", "gam3"});

  const auto& toy = catalog::get("toy");
  CHECK(toy.separated());
  CHECK(structurally_equal(toy.branch1d->F(), parse("u*u_x")));
  REQUIRE(toy.seeds.size() == 2);
  CHECK_FALSE(toy.seeds[0].degenerate);
  CHECK(toy.seeds[1].degenerate);
  REQUIRE(toy.closed_forms.size() == 1);
  CHECK(toy.closed_forms[0].g == "eta^2");

  const auto& hopf = catalog::get("hopf");
  const std::vector<double> p{0.0, 2.0};
  CHECK(std::abs(pde_residual_1d(*hopf.branch1d, hopf.seeds[0].expr, p).value) < 1e-12);

  const auto& gam3 = catalog::get("gam3");
  CHECK(gam3.n == 2);
  CHECK_FALSE(gam3.separated());
  const std::vector<double> q{1, 1, 1};
  CHECK(std::abs(pde_residual_nd(*gam3.branchnd, gam3.seeds[0].expr, q).value) < 1e-12);

  CHECK(catalog::get("hopf_damped").verification_only);
  CHECK(catalog::get("cylsurf").verification_only);
}

TEST_CASE("unknown model lists the available names") {
  CHECK(code_of([] { catalog::get("kdv"); }) == ErrorCode::UnknownModel);
  const auto msg = message_of([] { catalog::get("kdv"); });
  for (const auto& n : catalog::names()) CHECK(msg.find(n) != std::string::npos);
}

TEST_CASE("translation symmetries hold on every catalog background") {
  for (const auto& name : catalog::names()) {
    const auto& e = catalog::get(name);
    CAPTURE(name);
    const auto conv = e.conv();
    for (std::size_t i = 0; i < e.seeds.size(); ++i) {
      const BackgroundSolution bg(e.seeds[i].expr, conv);
      for (std::size_t axis = 0; axis < conv.axis_count(); ++axis) {
        const Expr sigma = Expr::variable(conv.first_order_name(axis));
        for (const auto& p : e.samples(i)) {
          const Residual r = e.separated() ? linearized_residual_1d(*e.branch1d, bg, sigma, p)
                                           : linearized_residual_nd(*e.branchnd, bg, sigma, p);
          CHECK(r.passes(1e-10));
        }
      }
    }
  }
}

TEST_CASE("model JSON round trip") {
  for (const auto& name : catalog::names()) {
    const auto& e = catalog::get(name);
    const json j = entry_to_json(e);
    const auto back = entry_from_json(j);
    CHECK(entry_to_json(back) == j);
    CHECK(structurally_equal(back.F, e.F));
    CHECK(back.seeds.size() == e.seeds.size());
  }
  // Serialization is deterministic.
  CHECK(toy_json().dump() == toy_json().dump());
}

TEST_CASE("user model files are validated") {
  const std::string path = "test_catalog_model.json";
  json j = toy_json();
  j["name"] = "mine";
  {
    std::ofstream(path) << j.dump(2);
  }
  CHECK(load_model_file(path).name == "mine");

  j["seeds"][0]["expr"] = "x/sqrt(-3*t)";
  {
    std::ofstream(path) << j.dump(2);
  }
  const auto msg = message_of([&] { load_model_file(path); });
  CHECK(code_of([&] { load_model_file(path); }) == ErrorCode::ValidationFailure);
  CHECK(msg.find("x/sqrt(-3*t)") != std::string::npos);

  {
    std::ofstream(path) << "{\"name\": ";
  }
  CHECK(code_of([&] { load_model_file(path); }) == ErrorCode::Parse);
  std::remove(path.c_str());
  CHECK(code_of([&] { load_model_file(path); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("validation catches wrong declarations") {
  json j = toy_json();
  j["seeds"][1]["degenerate"] = false;
  CHECK(code_of([&] { entry_from_json(j); }) == ErrorCode::ValidationFailure);

  j = toy_json();
  j["closed_forms"][0]["g"] = "eta^3";
  CHECK(code_of([&] { entry_from_json(j); }) == ErrorCode::ValidationFailure);

  j = toy_json();
  j["invariants"].push_back("u_x");
  CHECK(message_of([&] { entry_from_json(j); }).find("invariant 'u_x'") != std::string::npos);

  j = toy_json();
  j["form"] = "weird";
  CHECK(code_of([&] { entry_from_json(j); }) == ErrorCode::InvalidArgument);

  j = toy_json();
  j["seeds"][0]["grid"] = "x:2:3:10,t:-0.2:-0.05:10";
  CHECK(code_of([&] { entry_from_json(j); }) == ErrorCode::InvalidArgument);

  json missing;
  const json full = toy_json();
  for (const auto& [k, v] : full.items())
    if (k != "F") missing[k] = v;
  j = missing;
  CHECK(code_of([&] { entry_from_json(j); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("constants are substituted") {
  json j = entry_to_json(catalog::get("hopf"));
  j["constants"]["a_H"] = 1.5;
  const auto e = entry_from_json(j);
  const std::vector<double> p{0.1, 2.5};
  CHECK(std::abs(evaluate(e.seeds[0].expr, {{"t", 0.1}, {"x", 2.5}}) - 2.5 / 0.85) < 1e-15);
  CHECK(pde_residual_1d(*e.branch1d, e.seeds[0].expr, p).passes(1e-12));
}

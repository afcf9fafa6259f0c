#include "pbs/catalog.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pbs/numeric.hpp"
#include "pbs/parser.hpp"
#include "pbs/solver.hpp"

namespace pbs {

namespace {

using json = nlohmann::ordered_json;

// Built-in models, in the same format user model files use.
constexpr const char* kBuiltin = R"json([
  {
    "name": "toy",
    "n": 1,
    "form": "separated",
    "F": "u*u_x",
    "note": "u_t = u u_x^2",
    "seeds": [
      {"expr": "x/sqrt(-2*t)", "domain_note": "t < 0", "grid": "t:-0.2:-0.05:10,x:2:3:10"},
      {"expr": "sqrt(2*(x + t))", "domain_note": "x + t > 0, travelling wave", "degenerate": true,
       "grid": "t:0.1:0.5:10,x:0.5:1:10"}
    ],
    "constants": {},
    "closed_forms": [{"seed": 0, "g": "eta^2", "expr": "sqrt(-2 - x^2/(2*t))"}],
    "invariants": ["u_x/u_t", "x - u/u_x", "2*t + u_x^(-2)"]
  },
  {
    "name": "hopf",
    "n": 1,
    "form": "separated",
    "F": "a_H*u",
    "note": "u_t = a_H u u_x",
    "seeds": [{"expr": "x/(1 - a_H*t)", "domain_note": "a_H t != 1", "grid": "t:0:0.5:10,x:2:3:10"}],
    "constants": {"a_H": 1}
  },
  {
    "name": "hopf_damped",
    "n": 1,
    "form": "implicit",
    "F": "u_x0 - a_H*u*u_x1 - b*u",
    "note": "damped Hopf, not of the separated form; residual checks only",
    "seeds": [{"expr": "b*x1/(C*exp(-b*x0) - a_H)", "domain_note": "C exp(-b x0) != a_H",
               "grid": "x0:0:0.5:10,x1:0.5:2:10"}],
    "constants": {"a_H": 1, "b": 0.5, "C": 2},
    "verification_only": true
  },
  {
    "name": "ghopf",
    "n": 1,
    "form": "separated",
    "F": "u^2",
    "note": "u_t = u^2 u_x",
    "seeds": [{"expr": "sqrt(x/(1 - t))", "domain_note": "x/(1 - t) > 0", "grid": "t:0:0.5:10,x:2:3:10"}],
    "constants": {}
  },
  {
    "name": "cylsurf",
    "n": 1,
    "form": "implicit",
    "F": "u_x0*u_x1 - u",
    "note": "no time axis; residual checks only",
    "seeds": [{"expr": "x0*x1", "domain_note": "everywhere", "grid": "x0:0.5:2:10,x1:0.5:2:10"}],
    "constants": {},
    "verification_only": true
  },
  {
    "name": "gam2",
    "n": 1,
    "form": "implicit",
    "F": "a0*u_x0^2 + a1*u_x1^2 - c",
    "seeds": [
      {"expr": "sqrt(x0^2 + x1^2)", "domain_note": "away from the origin", "grid": "x0:1:2:10,x1:0.5:1.5:10"},
      {"expr": "0.6*x0 + 0.8*x1", "domain_note": "everywhere, plane wave", "degenerate": true,
       "grid": "x0:1:2:10,x1:0.5:1.5:10"}
    ],
    "constants": {"a0": 1, "a1": 1, "c": 1}
  },
  {
    "name": "gam3",
    "n": 2,
    "form": "implicit",
    "F": "a0*u_x0^2 + a1*u_x1^2 + a2*u_x2^2 - c",
    "seeds": [{"expr": "sqrt(x0^2 + x1^2 + x2^2)", "domain_note": "away from the origin",
               "grid": "x0:1:2:10,x1:0.5:1.5:10,x2:0.7:0.7:1"}],
    "constants": {"a0": 1, "a1": 1, "a2": 1, "c": 1}
  }
])json";

[[noreturn]] void fail(const CatalogEntry& e, const std::string& what) {
  throw Error(ErrorCode::ValidationFailure, "model '" + e.name + "': " + what);
}

std::string point_text(std::span<const double> p) {
  std::ostringstream s;
  s.precision(17);
  s << '(';
  for (std::size_t i = 0; i < p.size(); ++i) s << (i ? ", " : "") << p[i];
  s << ')';
  return s.str();
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

JetConvention CatalogEntry::conv() const {
  return separated() ? JetConvention::one_plus_one() : JetConvention::n_plus_one(n);
}

BranchND CatalogEntry::as_nd() const { return branchnd ? *branchnd : branch1d->as_nd(); }

Expr CatalogEntry::bind(std::string_view text) const {
  std::map<std::string, Expr, std::less<>> subs;
  for (const auto& [k, v] : constants) subs.emplace(k, Expr::constant(v));
  return substitute(parse(text), subs);
}

std::vector<std::vector<double>> CatalogEntry::samples(std::size_t seed) const {
  const auto spec = num::GridSpec::parse(seeds.at(seed).grid);
  std::vector<num::GridAxis> axes;
  for (auto a : spec.axes()) {
    a.count = std::min<std::size_t>(a.count, 3);
    axes.push_back(a);
  }
  const num::GridSpec small(axes);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < small.size(); ++i) out.push_back(small.point(i));
  return out;
}

std::vector<std::vector<double>> CatalogEntry::grid_points(std::size_t seed, std::size_t limit) const {
  const auto spec = num::GridSpec::parse(seeds.at(seed).grid);
  std::vector<std::vector<double>> out;
  const std::size_t stride = std::max<std::size_t>(1, spec.size() / std::max<std::size_t>(1, limit));
  for (std::size_t i = 0; i < spec.size() && out.size() < limit; i += stride) out.push_back(spec.point(i));
  return out;
}

CatalogEntry entry_from_json(const json& j) {
  CatalogEntry e;
  try {
    e.name = j.at("name").get<std::string>();
    e.n = j.at("n").get<int>();
    e.form = field<std::string>(j, "form", "separated");
    e.F_text = j.at("F").get<std::string>();
    if (j.contains("constants"))
      for (const auto& [k, v] : j.at("constants").items()) e.constants[k] = v.get<double>();
    e.verification_only = field<bool>(j, "verification_only", false);
    e.note = field<std::string>(j, "note", "");
    if (j.contains("level_set")) {
      const auto& ls = j.at("level_set");
      e.level_set.reference_u = field<double>(ls, "reference_u", e.level_set.reference_u);
      e.level_set.panels = field<int>(ls, "panels", e.level_set.panels);
      if (ls.contains("slope_bracket")) {
        const auto& b = ls.at("slope_bracket");
        if (b.is_null())
          e.level_set.slope_bracket.reset();
        else
          e.level_set.slope_bracket = std::pair{b.at(0).get<double>(), b.at(1).get<double>()};
      }
    }
    if (e.form != "separated" && e.form != "implicit")
      throw Error(ErrorCode::InvalidArgument, "form must be \"separated\" or \"implicit\"");
    if (e.separated() && e.n != 1) throw Error(ErrorCode::InvalidArgument, "separated form requires n = 1");
    if (e.n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");

    e.F = e.bind(e.F_text);
    if (e.separated())
      e.branch1d.emplace(e.F);
    else
      e.branchnd.emplace(e.n, e.F);

    for (const auto& s : j.at("seeds")) {
      SeedInfo si;
      si.text = s.at("expr").get<std::string>();
      si.expr = e.bind(si.text);
      si.domain_note = field<std::string>(s, "domain_note", "");
      si.degenerate = field<bool>(s, "degenerate", false);
      si.grid = s.at("grid").get<std::string>();
      const auto spec = num::GridSpec::parse(si.grid);
      if (spec.names() != e.conv().coordinates()) {
        std::string want;
        const auto conv = e.conv();
        for (const auto& c : conv.coordinates()) want += (want.empty() ? "" : ", ") + c;
        throw Error(ErrorCode::InvalidArgument, "seed grid '" + si.grid + "' must have axes " + want + " in order");
      }
      e.seeds.push_back(std::move(si));
    }
    if (e.seeds.empty()) throw Error(ErrorCode::InvalidArgument, "a model needs at least one seed");
    if (j.contains("closed_forms")) {
      for (const auto& c : j.at("closed_forms")) {
        ClosedForm cf;
        cf.seed = c.at("seed").get<std::size_t>();
        cf.g = c.at("g").get<std::string>();
        cf.text = c.at("expr").get<std::string>();
        cf.expr = e.bind(cf.text);
        if (cf.seed >= e.seeds.size()) throw Error(ErrorCode::InvalidArgument, "closed form refers to a missing seed");
        e.closed_forms.push_back(std::move(cf));
      }
    }
    if (j.contains("invariants"))
      for (const auto& s : j.at("invariants")) e.invariants.push_back(s.get<std::string>());
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidArgument, std::string("model JSON: ") + ex.what());
  }
  validate_entry(e);
  return e;
}

json entry_to_json(const CatalogEntry& e) {
  json j;
  j["name"] = e.name;
  j["n"] = e.n;
  j["form"] = e.form;
  j["F"] = e.F_text;
  if (!e.note.empty()) j["note"] = e.note;
  j["seeds"] = json::array();
  for (const auto& s : e.seeds) {
    json sj;
    sj["expr"] = s.text;
    sj["domain_note"] = s.domain_note;
    if (s.degenerate) sj["degenerate"] = true;
    sj["grid"] = s.grid;
    j["seeds"].push_back(sj);
  }
  j["constants"] = json::object();
  for (const auto& [k, v] : e.constants) j["constants"][k] = v;
  if (!e.closed_forms.empty()) {
    j["closed_forms"] = json::array();
    for (const auto& c : e.closed_forms) j["closed_forms"].push_back({{"seed", c.seed}, {"g", c.g}, {"expr", c.text}});
  }
  if (!e.invariants.empty()) j["invariants"] = e.invariants;
  if (e.verification_only) j["verification_only"] = true;
  json ls;
  ls["reference_u"] = e.level_set.reference_u;
  ls["panels"] = e.level_set.panels;
  if (e.level_set.slope_bracket)
    ls["slope_bracket"] = {e.level_set.slope_bracket->first, e.level_set.slope_bracket->second};
  else
    ls["slope_bracket"] = nullptr;
  j["level_set"] = ls;
  return j;
}

CatalogEntry load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open model file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(ErrorCode::Parse, ex.byte, "model file '" + path + "': " + ex.what());
  }
  return entry_from_json(j);
}

void validate_entry(const CatalogEntry& e) {
  const auto conv = e.conv();
  const BranchND nd = e.as_nd();
  auto residual = [&](const Expr& u, std::span<const double> p) {
    return e.separated() ? pde_residual_1d(*e.branch1d, u, p) : pde_residual_nd(nd, u, p);
  };
  auto check_solution = [&](const Expr& u, const std::vector<std::vector<double>>& pts, const std::string& what) {
    for (const auto& p : pts) {
      Residual r;
      try {
        r = residual(u, p);
      } catch (const Error& ex) {
        fail(e, what + " is undefined at " + point_text(p) + ": " + ex.what());
      }
      if (!r.passes(1e-10))
        fail(e, what + " fails the PDE residual at " + point_text(p) + " (relative " + std::to_string(r.relative()) + ")");
    }
  };

  for (std::size_t i = 0; i < e.seeds.size(); ++i) {
    const auto& s = e.seeds[i];
    check_solution(s.expr, e.samples(i), "seed '" + s.text + "'");
    if (!e.verification_only) {
      const bool deg = detect_degenerate_seed(s.expr, conv, e.grid_points(i, 16));
      if (deg != s.degenerate)
        fail(e, "seed '" + s.text + "' is " + (deg ? "" : "not ") + "degenerate but declared otherwise");
    }
  }

  for (const auto& c : e.closed_forms) {
    const auto pts = e.samples(c.seed);
    check_solution(c.expr, pts, "closed form '" + c.text + "'");
    if (e.verification_only) continue;
    const TransformSpec ts(e.seeds[c.seed].expr, e.bind(c.g), conv);
    const Program closed({c.expr}, conv.coordinates());
    for (const auto& p : pts) {
      const double want = closed.scalar(p);
      double got = 0;
      try {
        got = evaluate_pbs(ts, p);
      } catch (const Error& ex) {
        fail(e, "closed form '" + c.text + "': transform fails at " + point_text(p) + ": " + ex.what());
      }
      if (std::abs(got - want) > 1e-9 * std::max(1.0, std::abs(want)))
        fail(e, "closed form '" + c.text + "' differs from the transform with g = " + c.g + " at " + point_text(p));
    }
  }

  std::vector<std::pair<Expr, std::vector<std::vector<double>>>> backgrounds;
  for (std::size_t i = 0; i < e.seeds.size(); ++i)
    if (!e.seeds[i].degenerate) backgrounds.emplace_back(e.seeds[i].expr, e.samples(i));
  for (const auto& c : e.closed_forms) backgrounds.emplace_back(c.expr, e.samples(c.seed));
  for (const auto& text : e.invariants) {
    const Expr phi = e.bind(text);
    for (const auto& [U, pts] : backgrounds) {
      const TermProbe probe = e.separated() ? invariant_probe(*e.branch1d, U, phi) : invariant_probe(nd, U, phi);
      for (const auto& p : pts) {
        const Residual r = probe(p);
        if (!r.passes(1e-10))
          fail(e, "invariant '" + text + "' fails on background '" + to_string(U) + "' at " + point_text(p));
      }
    }
  }
}

namespace catalog {

namespace {

struct Registry {
  std::vector<CatalogEntry> entries;
};

const Registry& registry() {
  static const Registry r = [] {
    Registry out;
    for (const auto& j : json::parse(kBuiltin)) out.entries.push_back(entry_from_json(j));
    return out;
  }();
  return r;
}

}  // namespace

std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto& e : registry().entries) out.push_back(e.name);
  return out;
}

const CatalogEntry& get(std::string_view name) {
  for (const auto& e : registry().entries)
    if (e.name == name) return e;
  std::string list;
  for (const auto& n : names()) list += (list.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::UnknownModel, "unknown model '" + std::string(name) + "'; available: " + list);
}

}  // namespace catalog

}  // namespace pbs

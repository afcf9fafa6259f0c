// pbs: command-line front end.
//
// Exit codes: 0 pass, 1 check failure, 2 input or parse error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pbs/catalog.hpp"
#include "pbs/error.hpp"
#include "pbs/invariant.hpp"
#include "pbs/numeric.hpp"
#include "pbs/parser.hpp"
#include "pbs/recursion.hpp"
#include "pbs/solver.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace pbs;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Check {
  std::string name;
  std::size_t points = 0;
  std::size_t masked = 0;
  double max_residual = 0;
  double tolerance = 0;
  bool pass = true;
};

struct Report {
  std::vector<std::string> command;
  std::string model;
  std::deque<Check> checks;  // add_check hands out references
  std::vector<std::string> outputs;
  json details = json::object();
  std::string error;
  int exit_code = kExitPass;
  /// Stdout carries data (a model's JSON); the check summary goes to stderr.
  bool summary_to_stderr = false;

  json to_json() const {
    json j;
    j["command"] = command;
    j["model"] = model;
    j["checks"] = json::array();
    for (const auto& c : checks)
      j["checks"].push_back({{"name", c.name},
                             {"points", c.points},
                             {"masked", c.masked},
                             {"max_residual", c.max_residual},
                             {"tolerance", c.tolerance},
                             {"pass", c.pass}});
    j["outputs"] = outputs;
    if (!details.empty()) j["details"] = details;
    j["status"] = exit_code == kExitPass ? "pass" : (exit_code == kExitFail ? "fail" : "error");
    if (!error.empty()) j["error"] = error;
    j["exit_code"] = exit_code;
    return j;
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

// Full-precision text for CSV cells.
std::string exact(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

Check& add_check(Report& r, std::string name, double tol) {
  r.checks.push_back({std::move(name), 0, 0, 0, tol, true});
  return r.checks.back();
}

void observe(Check& c, double relative) {
  ++c.points;
  if (!(relative <= c.max_residual)) c.max_residual = relative;
  if (!(relative <= c.tolerance)) c.pass = false;
}

void observe(Check& c, const Residual& r) { observe(c, r.value == 0 ? 0.0 : r.relative()); }

// ---------------------------------------------------------------------------
// Shared option handling

struct ModelOpts {
  std::string model;
  std::string model_file;
  std::string json_out;
};

struct PointOpts {
  std::string points;
  std::string grid;
};

void add_model_opts(CLI::App* sub, ModelOpts& o) {
  sub->add_option("--model", o.model, "Catalog model name");
  sub->add_option("--model-file", o.model_file, "Model definition file (JSON)");
  sub->add_option("--json", o.json_out, "Write the run report as JSON to this path");
}

void add_point_opts(CLI::App* sub, PointOpts& o) {
  sub->add_option("--points", o.points, "Points as \"t=-0.5,x=1;t=-0.3,x=2\"");
  sub->add_option("--grid", o.grid, "Grid as \"t:-0.2:-0.05:10,x:2:3:10\"");
}

CatalogEntry resolve_model(const ModelOpts& o, Report& r) {
  if (o.model.empty() == o.model_file.empty())
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --model or --model-file");
  CatalogEntry e = o.model.empty() ? load_model_file(o.model_file) : catalog::get(o.model);
  r.model = e.name;
  return e;
}

std::size_t default_seed(const CatalogEntry& e) {
  for (std::size_t i = 0; i < e.seeds.size(); ++i)
    if (!e.seeds[i].degenerate) return i;
  return 0;
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t");
  const auto b = s.find_last_not_of(" \t");
  return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
}

std::vector<std::vector<double>> parse_points(const std::string& text, const JetConvention& conv) {
  std::vector<std::vector<double>> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (trim(item).empty()) continue;
    std::vector<std::optional<double>> p(conv.axis_count());
    std::stringstream parts(item);
    std::string kv;
    while (std::getline(parts, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "point item '" + kv + "' is not name=value");
      const auto name = trim(kv.substr(0, eq));
      const auto axis = conv.axis_of(name);
      if (!axis) throw Error(ErrorCode::InvalidArgument, "unknown coordinate '" + name + "' in --points");
      const auto value = trim(kv.substr(eq + 1));
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size() || value.empty())
        throw Error(ErrorCode::InvalidArgument, "bad number '" + value + "' in --points");
      p[*axis] = v;
    }
    std::vector<double> pt;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!p[i]) throw Error(ErrorCode::InvalidArgument, "point '" + item + "' lacks " + conv.coordinate(i));
      pt.push_back(*p[i]);
    }
    out.push_back(pt);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "--points is empty");
  return out;
}

num::GridSpec parse_grid(const std::string& text, const JetConvention& conv) {
  auto spec = num::GridSpec::parse(text);
  if (spec.names() != conv.coordinates()) {
    std::string want;
    for (const auto& c : conv.coordinates()) want += (want.empty() ? "" : ",") + c;
    throw Error(ErrorCode::InvalidArgument, "grid axes must be " + want + " in that order");
  }
  return spec;
}

std::vector<std::vector<double>> grid_list(const num::GridSpec& spec) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < spec.size(); ++i) out.push_back(spec.point(i));
  return out;
}

std::vector<std::vector<double>> resolve_points(const PointOpts& o, const CatalogEntry& e, std::size_t seed) {
  if (!o.points.empty() && !o.grid.empty()) throw Error(ErrorCode::InvalidArgument, "give --points or --grid, not both");
  if (!o.points.empty()) return parse_points(o.points, e.conv());
  if (!o.grid.empty()) return grid_list(parse_grid(o.grid, e.conv()));
  return e.samples(seed);
}

// Parses an expression, substitutes the model constants, and checks that it
// only uses the allowed names.
Expr model_expr(const CatalogEntry& e, const std::string& text, const std::string& what, bool jets_allowed) {
  const Expr ex = e.bind(text);
  const auto conv = e.conv();
  for (const auto& v : free_variables(ex)) {
    const bool coord = conv.axis_of(v).has_value();
    const bool jet = jets_allowed && conv.classify(v).has_value();
    if (!coord && !jet)
      throw Error(ErrorCode::InvalidArgument, what + " uses unknown variable '" + v + "'");
  }
  return ex;
}

const Branch1D& require_separated(const CatalogEntry& e, const char* command) {
  if (!e.branch1d)
    throw Error(ErrorCode::InvalidArgument,
                std::string(command) + " needs a model in separated form u_t = F(u, u_x) u_x; '" + e.name + "' is implicit");
  return *e.branch1d;
}

// ---------------------------------------------------------------------------
// Commands

struct VerifyOpts {
  ModelOpts model;
  PointOpts at;
  std::string solution;
  double tol = 1e-10;
};

void cmd_verify(const VerifyOpts& o, Report& r) {
  const auto e = resolve_model(o.model, r);
  const Expr u = model_expr(e, o.solution, "--solution", false);
  const auto pts = resolve_points(o.at, e, default_seed(e));
  const TermProbe probe = e.separated() ? pde_probe(*e.branch1d, u) : pde_probe(*e.branchnd, u);
  auto& c = add_check(r, "pde_residual", o.tol);
  for (const auto& p : pts) observe(c, probe(p));
  std::cout << "verify " << e.name << ": u = " << to_string(u) << "\n";
}

struct TransformOpts {
  ModelOpts model;
  std::string seed;
  std::string g;
  std::string grid;
  std::string out;
  double tol = 1e-6;
  unsigned threads = 0;
};

struct Cell {
  double u = 0;
  std::vector<double> primed;
  double delta = 0;
  double residual = 0;
  double transport = 0;
  std::optional<ErrorCode> reason;
};

void cmd_transform(const TransformOpts& o, Report& r) {
  const auto e = resolve_model(o.model, r);
  if (e.verification_only)
    throw Error(ErrorCode::InvalidArgument, "model '" + e.name + "' is for residual checks only; it cannot seed a transform");
  const auto conv = e.conv();
  const std::size_t si = default_seed(e);
  const Expr seed = o.seed.empty() ? e.seeds[si].expr : model_expr(e, o.seed, "--seed", false);
  const Expr g = e.bind(o.g);
  const auto spec = parse_grid(o.grid.empty() ? e.seeds[si].grid : o.grid, conv);
  const auto pts = grid_list(spec);

  // Degeneracy gate on an evenly strided subset of the grid.
  std::vector<std::vector<double>> gate;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 16);
  for (std::size_t i = 0; i < pts.size(); i += stride) gate.push_back(pts[i]);
  auto& deg = add_check(r, "non_degenerate_seed", 1e-8);
  deg.points = gate.size();
  if (detect_degenerate_seed(seed, conv, gate)) {
    deg.pass = false;
    deg.max_residual = 1;
    r.error = degeneracy_diagnosis(conv);
    std::cout << r.error << "\n";
    return;
  }

  const TransformSpec ts(seed, g, conv);
  std::optional<FdResidual> fd;
  if (e.separated())
    fd.emplace(*e.branch1d);
  else
    fd.emplace(*e.branchnd);

  std::vector<Cell> cells(pts.size());
  num::parallel_for(pts.size(), o.threads, [&](std::size_t i) {
    const auto& p = pts[i];
    Cell& c = cells[i];
    try {
      const auto pc = solve_primed_coords(ts, p);
      c.primed = pc.primed;
      c.u = ts.seed_jet(pc.primed)[0];
      c.delta = conv.is_one_plus_one() ? jacobian_at_primed(ts, pc.primed).Delta : fd_jacobian_determinant(ts, p);
      if (c.delta == 0 || !std::isfinite(c.delta)) throw Error(ErrorCode::Caustic, "jacobian vanishes");
      check_stencil_sheet(ts, p);
      const num::PointFn field = [&](std::span<const double> q) { return evaluate_pbs(ts, q); };
      c.residual = (*fd)(field, p).relative();
      for (double gap : derivative_transport_check(ts, p)) c.transport = std::max(c.transport, gap);
      if (!std::isfinite(c.u) || !std::isfinite(c.residual)) throw Error(ErrorCode::NonFinite, "non-finite value");
    } catch (const Error& ex) {
      c = Cell{};
      c.reason = ex.code();
    }
  });

  // A stored closed form for this (seed, g) pair is checked cell by cell.
  std::optional<Expr> closed;
  for (const auto& cf : e.closed_forms)
    if (structurally_equal(e.seeds[cf.seed].expr, seed) && structurally_equal(e.bind(cf.g), g)) closed = cf.expr;

  auto& res = add_check(r, "pde_residual_fd", o.tol);
  auto& tr = add_check(r, "derivative_transport", o.tol);
  auto& cover = add_check(r, "unmasked_cells", 0);
  if (!closed && g.is_constant(0)) closed = seed;  // the identity transform
  Check* cf = closed ? &add_check(r, g.is_constant(0) ? "identity" : "closed_form", 1e-9) : nullptr;
  const Program closed_prog = closed ? Program({*closed}, conv.coordinates()) : Program();
  std::size_t masked = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].reason) {
      ++masked;
      continue;
    }
    observe(res, cells[i].residual);
    observe(tr, cells[i].transport);
    if (cf) {
      const double want = closed_prog.scalar(pts[i]);
      observe(*cf, std::abs(cells[i].u - want) / std::max(1.0, std::abs(want)));
    }
  }
  res.masked = tr.masked = masked;
  cover.points = cells.size();
  cover.masked = masked;
  cover.pass = masked < cells.size();
  cover.max_residual = cells.empty() ? 0 : static_cast<double>(masked) / static_cast<double>(cells.size());
  cover.tolerance = 1;  // fraction masked must stay below 1
  if (cf) cf->masked = masked;

  if (!o.out.empty()) {
    std::ofstream csv(o.out, std::ios::binary);
    if (!csv) throw Error(ErrorCode::InvalidArgument, "cannot write '" + o.out + "'");
    const auto& names = conv.coordinates();
    for (const auto& n : names) csv << n << ',';
    csv << 'u';
    for (const auto& n : names) csv << ',' << n << "prime";
    csv << ",delta,residual,reason\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (double v : pts[i]) csv << exact(v) << ',';
      const Cell& c = cells[i];
      if (c.reason) {
        for (std::size_t k = 0; k < names.size() + 3; ++k) csv << ',';
        csv << to_string(*c.reason) << '\n';
        continue;
      }
      csv << exact(c.u);
      for (double v : c.primed) csv << ',' << exact(v);
      csv << ',' << exact(c.delta) << ',' << exact(c.residual) << ",\n";
    }
    r.outputs.push_back(o.out);
  }
  r.details["seed"] = to_string(seed);
  r.details["g"] = to_string(g);
  r.details["grid"] = spec.to_string();
  std::cout << "transform " << e.name << ": seed " << to_string(seed) << ", g = " << to_string(g) << ", "
            << cells.size() - masked << "/" << cells.size() << " cells solved\n";
}

struct SymmetryOpts {
  ModelOpts model;
  PointOpts at;
  std::string sigma;
  std::string background;
  double tol = 1e-10;
};

void cmd_symmetry(const SymmetryOpts& o, Report& r) {
  const auto e = resolve_model(o.model, r);
  const std::size_t si = default_seed(e);
  const Expr sigma = model_expr(e, o.sigma, "--sigma", true);
  const Expr bg = o.background.empty() ? e.seeds[si].expr : model_expr(e, o.background, "--background", false);
  const TermProbe probe = e.separated() ? linearized_probe(*e.branch1d, bg, sigma) : linearized_probe(*e.branchnd, bg, sigma);
  auto& c = add_check(r, "linearized_residual", o.tol);
  for (const auto& p : resolve_points(o.at, e, si)) observe(c, probe(p));
  std::cout << "symmetry " << e.name << ": sigma = " << to_string(sigma) << " on " << to_string(bg) << "\n";
}

struct InvariantOpts {
  ModelOpts model;
  PointOpts at;
  std::string phi;
  std::string background;
  std::string build;
  double param = 1;
  int trials = 50;
  std::uint64_t rng_seed = 0;
  double tol = -1;
};

void cmd_invariant(const InvariantOpts& o, Report& r) {
  const auto e = resolve_model(o.model, r);
  if (o.phi.empty() == o.build.empty()) throw Error(ErrorCode::InvalidArgument, "give exactly one of --phi or --build");
  if (!o.phi.empty()) {
    const std::size_t si = default_seed(e);
    const Expr phi = model_expr(e, o.phi, "--phi", true);
    const Expr bg = o.background.empty() ? e.seeds[si].expr : model_expr(e, o.background, "--background", false);
    const TermProbe probe = e.separated() ? invariant_probe(*e.branch1d, bg, phi) : invariant_probe(*e.branchnd, bg, phi);
    auto& c = add_check(r, "invariant_residual", o.tol < 0 ? 1e-10 : o.tol);
    for (const auto& p : resolve_points(o.at, e, si)) observe(c, probe(p));
    std::cout << "invariant " << e.name << ": phi = " << to_string(phi) << " on " << to_string(bg) << "\n";
    return;
  }
  const Branch1D& br = require_separated(e, "invariant --build");
  JetFunctionalPtr f;
  Residual (*eq)(const Branch1D&, const JetFunctional&, double, double, double) = nullptr;
  if (o.build == "A") {
    f = build_A(br, o.param, e.level_set);
    eq = A_equation_residual;
  } else if (o.build == "B") {
    f = build_B(br, o.param, e.level_set);
    eq = B_equation_residual;
  } else if (o.build == "G") {
    f = build_G(br, o.param, e.level_set);
    eq = G_equation_residual;
  } else {
    throw Error(ErrorCode::InvalidArgument, "--build must be A, B or G");
  }
  std::mt19937_64 rng(o.rng_seed);
  std::uniform_real_distribution<double> us(0.5, 2.0), uxs(0.5, 2.0);
  auto& c = add_check(r, o.build + "_equation", o.tol < 0 ? 1e-8 : o.tol);
  for (int i = 0; i < o.trials; ++i) {
    const double u = us(rng), ux = uxs(rng);
    observe(c, eq(br, *f, o.param, u, ux));
  }
  if (auto ex = f->expr()) r.details["closed_form"] = to_string(*ex);
  std::cout << "invariant " << e.name << ": " << o.build << " with parameter " << o.param
            << (f->expr() ? " (closed form " + to_string(*f->expr()) + ")" : " (level-set quadrature)") << "\n";
}

struct HierarchyOpts {
  ModelOpts model;
  PointOpts at;
  int levels = 2;
  std::string G;
  std::string background;
  int commutator_trials = 0;
  std::uint64_t rng_seed = 0;
  double tol = 1e-8;
};

void cmd_hierarchy(const HierarchyOpts& o, Report& r) {
  const auto e = resolve_model(o.model, r);
  const Branch1D& br = require_separated(e, "hierarchy");
  if (o.levels < 0) throw Error(ErrorCode::InvalidArgument, "--levels must be >= 0");
  const Expr G = o.G.empty() ? br.F() : model_expr(e, o.G, "--G", true);
  const RecursionSpec rs(br, G);
  const auto K = hierarchy(rs, o.levels);
  const std::size_t si = default_seed(e);
  const Expr bg = o.background.empty() ? e.seeds[si].expr : model_expr(e, o.background, "--background", false);
  const auto pts = resolve_points(o.at, e, si);
  r.details["G"] = to_string(G);
  r.details["c"] = rs.c();
  r.details["K"] = json::array();
  for (std::size_t m = 0; m < K.size(); ++m) {
    std::cout << "K_" << m << " = " << to_string(K[m]) << "\n";
    r.details["K"].push_back(to_string(K[m]));
    const auto probe = linearized_probe(br, bg, K[m]);
    auto& c = add_check(r, "K_" + std::to_string(m) + "_symmetry", o.tol);
    for (const auto& p : pts) observe(c, probe(p));
  }
  if (o.commutator_trials > 0) {
    for (std::size_t i = 1; i < K.size(); ++i)
      for (std::size_t j = i + 1; j < K.size(); ++j) {
        const auto s = commutator_trials(K[i], K[j], br.conv(), o.commutator_trials, o.rng_seed, o.tol);
        auto& c = add_check(r, "commutator_K" + std::to_string(i) + "_K" + std::to_string(j), o.tol);
        c.points = static_cast<std::size_t>(s.trials);
        c.max_residual = s.max_relative;
        c.pass = s.failures == 0;
      }
  }
}

struct HereditaryOpts {
  ModelOpts model;
  std::string G;
  int trials = 100;
  std::uint64_t rng_seed = 0;
  double tol = 1e-9;
};

void cmd_hereditary(const HereditaryOpts& o, Report& r) {
  const auto e = resolve_model(o.model, r);
  const Branch1D& br = require_separated(e, "hereditary");
  if (o.trials < 1) throw Error(ErrorCode::InvalidArgument, "--trials must be >= 1");
  const Expr G = o.G.empty() ? br.F() : model_expr(e, o.G, "--G", true);
  const RecursionSpec rs(br, G);
  const auto s = hereditary_trials(rs, o.trials, o.rng_seed, o.tol);
  auto& c = add_check(r, "hereditary", o.tol);
  c.points = static_cast<std::size_t>(s.trials);
  c.max_residual = s.max_relative;
  c.pass = s.failures == 0;
  auto& d = add_check(r, "hereditary_f_equals_g", 0);
  d.points = static_cast<std::size_t>(s.trials);
  d.pass = s.diagonal_zero;
  d.max_residual = s.diagonal_zero ? 0 : 1;
  r.details["G"] = to_string(G);
  r.details["c"] = rs.c();
  r.details["rejected_draws"] = s.skipped;
  std::cout << "hereditary " << e.name << ": G = " << to_string(G) << ", " << s.trials << " trials\n";
}

struct CatalogOpts {
  std::string name;
  std::string model_file;
  std::string export_path;
  std::string json_out;
};

void cmd_catalog(const CatalogOpts& o, Report& r) {
  if (!o.name.empty() && !o.model_file.empty())
    throw Error(ErrorCode::InvalidArgument, "give at most one of --name or --model-file");
  if (o.name.empty() && o.model_file.empty()) {
    for (const auto& n : catalog::names()) {
      const auto& e = catalog::get(n);
      std::cout << n << "  " << (e.separated() ? "u_t = (" + e.F_text + ") u_x" : e.F_text + " = 0")
                << (e.verification_only ? "  [residual checks only]" : "") << "\n";
      r.details["models"].push_back(n);
    }
    return;
  }
  const CatalogEntry e = o.name.empty() ? load_model_file(o.model_file) : catalog::get(o.name);
  r.model = e.name;
  const json j = entry_to_json(e);
  if (!o.export_path.empty()) {
    std::ofstream out(o.export_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + o.export_path + "'");
    out << j.dump(2) << '\n';
    r.outputs.push_back(o.export_path);
  } else {
    std::cout << j.dump(2) << "\n";
    r.summary_to_stderr = true;
  }
  auto& c = add_check(r, "validation", 0);
  c.points = 1;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::UnknownFunction:
    case ErrorCode::UnboundVariable:
    case ErrorCode::UnknownModel:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ValidationFailure:
      return kExitInput;
    default:
      return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primary branch solutions of first-order PDEs: generation and verification"};
  app.require_subcommand(1);

  VerifyOpts verify;
  auto* v = app.add_subcommand("verify", "PDE residual of a closed-form solution");
  add_model_opts(v, verify.model);
  add_point_opts(v, verify.at);
  v->add_option("--solution", verify.solution, "Solution expression in the coordinates")->required();
  v->add_option("--tol", verify.tol, "Relative tolerance");

  TransformOpts transform;
  auto* t = app.add_subcommand("transform", "Generate a new solution from a seed and g, with checks and CSV");
  add_model_opts(t, transform.model);
  t->add_option("--seed", transform.seed, "Seed solution (default: the model's first non-degenerate seed)");
  t->add_option("--g", transform.g, "Transform function of eta (1+1) or eta1..etan")->required();
  t->add_option("--grid", transform.grid, "Grid (default: the seed's grid)");
  t->add_option("--out", transform.out, "CSV output path");
  t->add_option("--tol", transform.tol, "Tolerance of the finite-difference checks");
  t->add_option("--threads", transform.threads, "Worker threads, 0 = hardware count");

  SymmetryOpts symmetry;
  auto* s = app.add_subcommand("symmetry", "Linearized residual of a symmetry along a background");
  add_model_opts(s, symmetry.model);
  add_point_opts(s, symmetry.at);
  s->add_option("--sigma", symmetry.sigma, "Symmetry as a jet expression")->required();
  s->add_option("--background", symmetry.background, "Background solution (default: first seed)");
  s->add_option("--tol", symmetry.tol, "Relative tolerance");

  InvariantOpts invariant;
  auto* in = app.add_subcommand("invariant", "Invariant residual, or build A/B/G and check their equations");
  add_model_opts(in, invariant.model);
  add_point_opts(in, invariant.at);
  in->add_option("--phi", invariant.phi, "Invariant candidate as a jet expression");
  in->add_option("--background", invariant.background, "Background solution (default: first seed)");
  in->add_option("--build", invariant.build, "Build A, B or G")->check(CLI::IsMember({"A", "B", "G"}));
  in->add_option("--param", invariant.param, "The constant a, b or c");
  in->add_option("--trials", invariant.trials, "Random jet points for --build");
  in->add_option("--rng-seed", invariant.rng_seed, "Seed of the jet-point sampler");
  in->add_option("--tol", invariant.tol, "Relative tolerance (default 1e-10 for --phi, 1e-8 for --build)");

  HierarchyOpts hier;
  auto* h = app.add_subcommand("hierarchy", "Symmetry hierarchy K_0..K_m from the recursion operator");
  add_model_opts(h, hier.model);
  add_point_opts(h, hier.at);
  h->add_option("--levels", hier.levels, "Highest level m");
  h->add_option("--G", hier.G, "G(u, u_x) defining the operator (default: F)");
  h->add_option("--background", hier.background, "Background solution (default: first seed)");
  h->add_option("--commutator-trials", hier.commutator_trials, "Random profiles per pairwise commutator check");
  h->add_option("--rng-seed", hier.rng_seed, "Seed of the profile sampler");
  h->add_option("--tol", hier.tol, "Relative tolerance");

  HereditaryOpts her;
  auto* he = app.add_subcommand("hereditary", "Hereditary identity of the recursion operator at random (f, g, u)");
  add_model_opts(he, her.model);
  he->add_option("--G", her.G, "G(u, u_x) defining the operator (default: F)");
  he->add_option("--trials", her.trials, "Number of random triples");
  he->add_option("--rng-seed", her.rng_seed, "Seed of the sampler");
  he->add_option("--tol", her.tol, "Relative tolerance");

  CatalogOpts cat;
  auto* c = app.add_subcommand("catalog", "List models, or print or export one as JSON");
  c->add_option("--name", cat.name, "Model to print");
  c->add_option("--model-file", cat.model_file, "Validate and print a model file");
  c->add_option("--export", cat.export_path, "Write the model JSON here instead of stdout");
  c->add_option("--json", cat.json_out, "Write the run report as JSON to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  Report report;
  for (int i = 1; i < argc; ++i) report.command.emplace_back(argv[i]);
  std::string json_out;
  try {
    if (v->parsed()) {
      json_out = verify.model.json_out;
      cmd_verify(verify, report);
    } else if (t->parsed()) {
      json_out = transform.model.json_out;
      cmd_transform(transform, report);
    } else if (s->parsed()) {
      json_out = symmetry.model.json_out;
      cmd_symmetry(symmetry, report);
    } else if (in->parsed()) {
      json_out = invariant.model.json_out;
      cmd_invariant(invariant, report);
    } else if (h->parsed()) {
      json_out = hier.model.json_out;
      cmd_hierarchy(hier, report);
    } else if (he->parsed()) {
      json_out = her.model.json_out;
      cmd_hereditary(her, report);
    } else if (c->parsed()) {
      json_out = cat.json_out;
      cmd_catalog(cat, report);
    }
    const bool ok = std::all_of(report.checks.begin(), report.checks.end(), [](const Check& k) { return k.pass; });
    report.exit_code = ok ? kExitPass : kExitFail;
  } catch (const Error& e) {
    report.error = e.what();
    report.exit_code = exit_code_for(e.code());
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
  } catch (const std::exception& e) {
    report.error = e.what();
    report.exit_code = kExitNumeric;
    std::cerr << "error: " << e.what() << "\n";
  }

  const bool aborted = report.exit_code != kExitPass && report.exit_code != kExitFail;
  if (aborted)
    for (auto& k : report.checks)
      if (k.points == 0) k.pass = false;
  std::ostream& summary = report.summary_to_stderr ? std::cerr : std::cout;
  for (const auto& k : report.checks)
    summary << (aborted && k.points == 0 ? "ABORT " : (k.pass ? "PASS " : "FAIL ")) << k.name << "  points=" << k.points << " masked=" << k.masked
              << " max=" << fmt(k.max_residual) << " tol=" << fmt(k.tolerance) << "\n";
  if (report.exit_code == kExitPass || report.exit_code == kExitFail)
    summary << (report.exit_code == kExitPass ? "PASS" : "FAIL") << "\n";

  if (!json_out.empty()) {
    std::ofstream out(json_out, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write report '" << json_out << "'\n";
      return kExitInput;
    }
    out << report.to_json().dump(2) << '\n';
  }
  return report.exit_code;
}

#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbs/branch.hpp"
#include "pbs/expr.hpp"
#include "pbs/invariant.hpp"

namespace pbs {

struct SeedInfo {
  Expr expr;
  std::string text;
  std::string domain_note;
  bool degenerate = false;
  /// Grid used by the generation checks, "name:start:stop:count,...".
  std::string grid;
};

/// A known transformed solution: transforming seed `seed` with `g` gives `expr`.
struct ClosedForm {
  std::size_t seed = 0;
  std::string g;
  Expr expr;
  std::string text;
};

struct CatalogEntry {
  std::string name;
  int n = 1;
  /// "separated": u_t = F(u, u_x) u_x with F in (u, u_x).
  /// "implicit": F(u, u_x0, ..., u_xn) = 0.
  std::string form = "separated";
  std::string F_text;
  std::map<std::string, double, std::less<>> constants;
  std::vector<SeedInfo> seeds;
  std::vector<ClosedForm> closed_forms;
  /// Jet expressions with zero invariant residual on the non-degenerate seeds.
  std::vector<std::string> invariants;
  /// Residual checks only; excluded from solution generation.
  bool verification_only = false;
  std::string note;
  LevelSetConfig level_set;

  Expr F;  // constants substituted
  std::optional<Branch1D> branch1d;
  std::optional<BranchND> branchnd;

  bool separated() const noexcept { return form == "separated"; }
  JetConvention conv() const;
  /// The n-D view: branchnd, or the implicit form of branch1d.
  BranchND as_nd() const;
  /// Parses an expression and substitutes the entry's constants.
  Expr bind(std::string_view text) const;
  /// A 3-per-axis subgrid of the seed's grid, used for validation.
  std::vector<std::vector<double>> samples(std::size_t seed) const;
  /// Validation and degeneracy samples: every grid point, capped at `limit`.
  std::vector<std::vector<double>> grid_points(std::size_t seed, std::size_t limit) const;
};

/// Builds an entry from the model JSON format
///   {"name", "n", "form", "F", "seeds": [{"expr", "domain_note", ...}], "constants": {...}}
/// plus optional "closed_forms", "invariants", "verification_only", "note",
/// "level_set". Runs validation. InvalidArgument on schema errors,
/// ValidationFailure when a check fails.
CatalogEntry entry_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json entry_to_json(const CatalogEntry& e);
CatalogEntry load_model_file(const std::string& path);

/// Runs every load-time check; throws ValidationFailure naming the check.
void validate_entry(const CatalogEntry& e);

namespace catalog {

std::vector<std::string> names();
/// UnknownModel listing the available names.
const CatalogEntry& get(std::string_view name);

}  // namespace catalog

}  // namespace pbs

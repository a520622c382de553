#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tensql/plan.hpp"

namespace tensql {

// A semantics-preserving rewrite. `rewrite` performs one step over the whole
// plan and returns the new plan, or nullopt when nothing fired. Every rule
// keeps the root schema (names, types, order) and the result multiset intact.
struct Rule {
  std::string name;
  std::function<std::optional<PlanPtr>(const PlanPtr&, const Catalog&)> rewrite;
};

// Evaluates literal-only subexpressions; encodes date literals to epoch
// nanoseconds. Folds that would raise (overflow, div-by-zero, non-finite
// results) are left in place to surface at run time.
Rule fold_constants_rule();

// Filter(Filter(x, p), q) -> Filter(x, p AND q).
Rule fuse_filters_rule();

// CASE with a constant-true first condition collapses to its value; LIKE
// patterns that match everything become literal true.
Rule simplify_case_rule();

// Narrows scans (and intermediate projects) to the columns the rest of the
// plan references.
Rule prune_columns_rule();

// fold -> fuse -> simplify -> prune, fixed order for reproducible plans.
const std::vector<Rule>& default_rules();

// Applies rules to a fixed point (or max_passes). The result is re-validated;
// a rule that changes the root schema is an internal error naming the rule.
PlanPtr optimize(const PlanPtr& plan, const Catalog& catalog,
                 const std::vector<Rule>& rules = default_rules(), int max_passes = 10,
                 int* passes_used = nullptr);

}  // namespace tensql

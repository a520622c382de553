#pragma once

#include <string>

#include "tensql/plan.hpp"

namespace tensql {

// Plan interchange format; see docs/plan_format.md for the field-by-field
// description. from_json(to_json(p)) is structurally equal to p.
std::string plan_to_json(const PlanPtr& plan, int indent = 2);
PlanPtr plan_from_json(const std::string& text);

std::string expr_to_json(const ExprPtr& expr, int indent = -1);
ExprPtr expr_from_json(const std::string& text);

}  // namespace tensql

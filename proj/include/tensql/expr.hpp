#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tensql/columnar.hpp"
#include "tensql/kernels.hpp"

namespace tensql {

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Date literals carry either the ISO text from the frontend or the folded
// epoch-nanosecond form produced by the optimizer; both render as ISO in
// JSON and compare by encoded value.
using LiteralValue = std::variant<bool, int64_t, double, std::string>;

struct ColRef {
  std::string name;
};
struct Literal {
  LogicalType type;
  LiteralValue value;
};
struct ArithExpr {
  ArithOp op;
  ExprPtr left, right;
};
struct CompareExpr {
  CompareOp op;
  ExprPtr left, right;
};
struct LogicalExpr {
  LogicalOp op;
  ExprPtr left, right;
};
struct NotExpr {
  ExprPtr input;
};
struct BetweenExpr {
  ExprPtr input, lo, hi;
};
struct CaseExpr {
  struct Branch {
    ExprPtr when, then;
  };
  std::vector<Branch> branches;
  ExprPtr else_value;
};
struct LikeExpr {
  ExprPtr input;
  std::string pattern;
};
struct PredictExpr {
  std::string model;
  std::vector<ExprPtr> args;
};

struct Expr {
  std::variant<ColRef, Literal, ArithExpr, CompareExpr, LogicalExpr, NotExpr, BetweenExpr,
               CaseExpr, LikeExpr, PredictExpr>
      node;
};

const char* expr_tag(const Expr& e);

ExprPtr col(std::string name);
ExprPtr lit_bool(bool v);
ExprPtr lit_i64(int64_t v);
ExprPtr lit_f64(double v);
ExprPtr lit_str(std::string v);
ExprPtr lit_date(std::string iso);
ExprPtr lit_date_ns(int64_t ns);
ExprPtr make_arith(ArithOp op, ExprPtr l, ExprPtr r);
ExprPtr make_compare(CompareOp op, ExprPtr l, ExprPtr r);
ExprPtr make_logical(LogicalOp op, ExprPtr l, ExprPtr r);
ExprPtr make_not(ExprPtr e);
ExprPtr make_between(ExprPtr e, ExprPtr lo, ExprPtr hi);
ExprPtr make_case(std::vector<CaseExpr::Branch> branches, ExprPtr else_value);
ExprPtr make_like(ExprPtr e, std::string pattern);
ExprPtr make_predict(std::string model, std::vector<ExprPtr> args);

// Epoch nanoseconds of a Date literal in either representation.
int64_t date_literal_ns(const Literal& lit);

// Structural equality; date literals compare by encoded nanoseconds.
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// LIKE pattern decomposition. Only patterns with at most one literal segment
// are supported: 'lit' (EXACT), 'lit%' (START), '%lit' (END), '%lit%' (ANY),
// and all-'%' patterns (ANY of the empty string). '_' and patterns with two
// or more literal segments are rejected.
struct LikeShape {
  MatchAnchor anchor;
  std::string literal;
};
LikeShape parse_like_pattern(const std::string& pattern);

}  // namespace tensql

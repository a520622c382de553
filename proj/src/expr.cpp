#include "tensql/expr.hpp"

namespace tensql {

namespace {

template <typename T>
ExprPtr make(T&& node) {
  return std::make_shared<const Expr>(Expr{std::forward<T>(node)});
}

}  // namespace

const char* expr_tag(const Expr& e) {
  return std::visit(
      [](const auto& n) -> const char* {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ColRef>) return "col";
        if constexpr (std::is_same_v<T, Literal>) return "lit";
        if constexpr (std::is_same_v<T, ArithExpr>) return "arith";
        if constexpr (std::is_same_v<T, CompareExpr>) return "cmp";
        if constexpr (std::is_same_v<T, LogicalExpr>) return "logical";
        if constexpr (std::is_same_v<T, NotExpr>) return "not";
        if constexpr (std::is_same_v<T, BetweenExpr>) return "between";
        if constexpr (std::is_same_v<T, CaseExpr>) return "case";
        if constexpr (std::is_same_v<T, LikeExpr>) return "like";
        if constexpr (std::is_same_v<T, PredictExpr>) return "predict";
        return "?";
      },
      e.node);
}

ExprPtr col(std::string name) { return make(ColRef{std::move(name)}); }
ExprPtr lit_bool(bool v) { return make(Literal{LogicalType::Bool, v}); }
ExprPtr lit_i64(int64_t v) { return make(Literal{LogicalType::Int64, v}); }
ExprPtr lit_f64(double v) { return make(Literal{LogicalType::Float64, v}); }
ExprPtr lit_str(std::string v) { return make(Literal{LogicalType::Utf8, std::move(v)}); }
ExprPtr lit_date(std::string iso) { return make(Literal{LogicalType::Date, std::move(iso)}); }
ExprPtr lit_date_ns(int64_t ns) { return make(Literal{LogicalType::Date, ns}); }

ExprPtr make_arith(ArithOp op, ExprPtr l, ExprPtr r) {
  return make(ArithExpr{op, std::move(l), std::move(r)});
}
ExprPtr make_compare(CompareOp op, ExprPtr l, ExprPtr r) {
  return make(CompareExpr{op, std::move(l), std::move(r)});
}
ExprPtr make_logical(LogicalOp op, ExprPtr l, ExprPtr r) {
  return make(LogicalExpr{op, std::move(l), std::move(r)});
}
ExprPtr make_not(ExprPtr e) { return make(NotExpr{std::move(e)}); }
ExprPtr make_between(ExprPtr e, ExprPtr lo, ExprPtr hi) {
  return make(BetweenExpr{std::move(e), std::move(lo), std::move(hi)});
}
ExprPtr make_case(std::vector<CaseExpr::Branch> branches, ExprPtr else_value) {
  return make(CaseExpr{std::move(branches), std::move(else_value)});
}
ExprPtr make_like(ExprPtr e, std::string pattern) {
  return make(LikeExpr{std::move(e), std::move(pattern)});
}
ExprPtr make_predict(std::string model, std::vector<ExprPtr> args) {
  return make(PredictExpr{std::move(model), std::move(args)});
}

int64_t date_literal_ns(const Literal& lit) {
  if (lit.type != LogicalType::Date) throw PlanError("literal is not a date");
  if (const auto* iso = std::get_if<std::string>(&lit.value)) return encode_date(*iso);
  if (const auto* ns = std::get_if<int64_t>(&lit.value)) return *ns;
  throw PlanError("date literal holds neither ISO text nor nanoseconds");
}

namespace {

bool literal_equal(const Literal& a, const Literal& b) {
  if (a.type != b.type) return false;
  if (a.type == LogicalType::Date) return date_literal_ns(a) == date_literal_ns(b);
  return a.value == b.value;
}

}  // namespace

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, ColRef>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, Literal>) {
          return literal_equal(x, y);
        } else if constexpr (std::is_same_v<T, ArithExpr>) {
          return x.op == y.op && expr_equal(x.left, y.left) && expr_equal(x.right, y.right);
        } else if constexpr (std::is_same_v<T, CompareExpr>) {
          return x.op == y.op && expr_equal(x.left, y.left) && expr_equal(x.right, y.right);
        } else if constexpr (std::is_same_v<T, LogicalExpr>) {
          return x.op == y.op && expr_equal(x.left, y.left) && expr_equal(x.right, y.right);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          return expr_equal(x.input, y.input);
        } else if constexpr (std::is_same_v<T, BetweenExpr>) {
          return expr_equal(x.input, y.input) && expr_equal(x.lo, y.lo) && expr_equal(x.hi, y.hi);
        } else if constexpr (std::is_same_v<T, CaseExpr>) {
          if (x.branches.size() != y.branches.size()) return false;
          for (size_t i = 0; i < x.branches.size(); ++i) {
            if (!expr_equal(x.branches[i].when, y.branches[i].when) ||
                !expr_equal(x.branches[i].then, y.branches[i].then)) {
              return false;
            }
          }
          return expr_equal(x.else_value, y.else_value);
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          return x.pattern == y.pattern && expr_equal(x.input, y.input);
        } else if constexpr (std::is_same_v<T, PredictExpr>) {
          if (x.model != y.model || x.args.size() != y.args.size()) return false;
          for (size_t i = 0; i < x.args.size(); ++i) {
            if (!expr_equal(x.args[i], y.args[i])) return false;
          }
          return true;
        } else {
          return false;
        }
      },
      a->node);
}

LikeShape parse_like_pattern(const std::string& pattern) {
  if (pattern.find('_') != std::string::npos) {
    throw PlanError("LIKE: the '_' wildcard is not supported");
  }
  if (pattern.find('%') == std::string::npos) {
    return {MatchAnchor::EXACT, pattern};
  }
  // Split on '%' and require at most one non-empty literal segment.
  std::vector<std::string> segments;
  std::string cur;
  for (char c : pattern) {
    if (c == '%') {
      segments.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  segments.push_back(cur);
  std::string literal;
  size_t literal_pos = segments.size();
  for (size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].empty()) continue;
    if (literal_pos != segments.size()) {
      throw PlanError("LIKE: patterns with more than one literal segment are not supported");
    }
    literal = segments[i];
    literal_pos = i;
  }
  if (literal_pos == segments.size()) return {MatchAnchor::ANY, ""};
  if (literal_pos == 0) return {MatchAnchor::START, literal};
  if (literal_pos == segments.size() - 1) return {MatchAnchor::END, literal};
  return {MatchAnchor::ANY, literal};
}

}  // namespace tensql

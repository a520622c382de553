#include "tensql/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tensql/strings.hpp"

namespace tensql {

namespace {

// ---- generic rewriting helpers -------------------------------------------

using ExprRewriter = std::function<ExprPtr(const ExprPtr&)>;  // returns null when unchanged

// Bottom-up expression rewrite; children first, then `post` on the rebuilt
// node. Returns null when the whole subtree is untouched.
ExprPtr rewrite_expr(const ExprPtr& e, const ExprRewriter& post) {
  ExprPtr rebuilt = std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ColRef> || std::is_same_v<T, Literal>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, ArithExpr>) {
          ExprPtr l = rewrite_expr(x.left, post), r = rewrite_expr(x.right, post);
          if (!l && !r) return nullptr;
          return make_arith(x.op, l ? l : x.left, r ? r : x.right);
        } else if constexpr (std::is_same_v<T, CompareExpr>) {
          ExprPtr l = rewrite_expr(x.left, post), r = rewrite_expr(x.right, post);
          if (!l && !r) return nullptr;
          return make_compare(x.op, l ? l : x.left, r ? r : x.right);
        } else if constexpr (std::is_same_v<T, LogicalExpr>) {
          ExprPtr l = rewrite_expr(x.left, post), r = rewrite_expr(x.right, post);
          if (!l && !r) return nullptr;
          return make_logical(x.op, l ? l : x.left, r ? r : x.right);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          ExprPtr v = rewrite_expr(x.input, post);
          return v ? make_not(v) : nullptr;
        } else if constexpr (std::is_same_v<T, BetweenExpr>) {
          ExprPtr v = rewrite_expr(x.input, post), lo = rewrite_expr(x.lo, post),
                  hi = rewrite_expr(x.hi, post);
          if (!v && !lo && !hi) return nullptr;
          return make_between(v ? v : x.input, lo ? lo : x.lo, hi ? hi : x.hi);
        } else if constexpr (std::is_same_v<T, CaseExpr>) {
          bool changed = false;
          std::vector<CaseExpr::Branch> branches;
          for (const auto& br : x.branches) {
            ExprPtr w = rewrite_expr(br.when, post), t = rewrite_expr(br.then, post);
            changed = changed || w || t;
            branches.push_back({w ? w : br.when, t ? t : br.then});
          }
          ExprPtr ev = rewrite_expr(x.else_value, post);
          changed = changed || ev;
          if (!changed) return nullptr;
          return make_case(std::move(branches), ev ? ev : x.else_value);
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          ExprPtr v = rewrite_expr(x.input, post);
          return v ? make_like(v, x.pattern) : nullptr;
        } else if constexpr (std::is_same_v<T, PredictExpr>) {
          bool changed = false;
          std::vector<ExprPtr> args;
          for (const auto& a : x.args) {
            ExprPtr r = rewrite_expr(a, post);
            changed = changed || r;
            args.push_back(r ? r : a);
          }
          if (!changed) return nullptr;
          return make_predict(x.model, std::move(args));
        } else {
          return nullptr;
        }
      },
      e->node);
  const ExprPtr& base = rebuilt ? rebuilt : e;
  ExprPtr after = post(base);
  if (after) return after;
  return rebuilt;
}

// Rewrites every expression in every node; null when nothing changed.
PlanPtr rewrite_plan_exprs(const PlanPtr& p, const ExprRewriter& post) {
  return std::visit(
      [&](const auto& x) -> PlanPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScanNode>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, FilterNode>) {
          PlanPtr in = rewrite_plan_exprs(x.input, post);
          ExprPtr pred = rewrite_expr(x.predicate, post);
          if (!in && !pred) return nullptr;
          return make_filter(in ? in : x.input, pred ? pred : x.predicate);
        } else if constexpr (std::is_same_v<T, ProjectNode>) {
          PlanPtr in = rewrite_plan_exprs(x.input, post);
          bool changed = static_cast<bool>(in);
          std::vector<ProjectNode::Item> items;
          for (const auto& item : x.items) {
            ExprPtr e = rewrite_expr(item.expr, post);
            changed = changed || e;
            items.push_back({item.name, e ? e : item.expr});
          }
          if (!changed) return nullptr;
          return make_project(in ? in : x.input, std::move(items));
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          PlanPtr l = rewrite_plan_exprs(x.left, post);
          PlanPtr r = rewrite_plan_exprs(x.right, post);
          if (!l && !r) return nullptr;
          return make_join(l ? l : x.left, r ? r : x.right, x.left_key, x.right_key);
        } else if constexpr (std::is_same_v<T, AggregateNode>) {
          PlanPtr in = rewrite_plan_exprs(x.input, post);
          bool changed = static_cast<bool>(in);
          std::vector<AggregateNode::Agg> aggs;
          for (const auto& agg : x.aggs) {
            ExprPtr e = rewrite_expr(agg.expr, post);
            changed = changed || e;
            aggs.push_back({agg.name, agg.fn, e ? e : agg.expr});
          }
          if (!changed) return nullptr;
          return make_aggregate(in ? in : x.input, x.keys, std::move(aggs));
        } else if constexpr (std::is_same_v<T, SortNode>) {
          PlanPtr in = rewrite_plan_exprs(x.input, post);
          return in ? make_sort(in, x.keys) : nullptr;
        } else if constexpr (std::is_same_v<T, LimitNode>) {
          PlanPtr in = rewrite_plan_exprs(x.input, post);
          return in ? make_limit(in, x.count) : nullptr;
        } else {
          return nullptr;
        }
      },
      p->node);
}

// ---- fold_constants --------------------------------------------------------

const Literal* literal_of(const ExprPtr& e) { return std::get_if<Literal>(&e->node); }

// three-way comparison of same-type literals; date literals by nanoseconds
int compare_literals(const Literal& a, const Literal& b) {
  auto cmp = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
  switch (a.type) {
    case LogicalType::Bool: return cmp(std::get<bool>(a.value), std::get<bool>(b.value));
    case LogicalType::Int64: return cmp(std::get<int64_t>(a.value), std::get<int64_t>(b.value));
    case LogicalType::Float64: return cmp(std::get<double>(a.value), std::get<double>(b.value));
    case LogicalType::Utf8:
      return cmp(std::get<std::string>(a.value), std::get<std::string>(b.value));
    case LogicalType::Date: return cmp(date_literal_ns(a), date_literal_ns(b));
  }
  return 0;
}

ExprPtr fold_one(const ExprPtr& e) {
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Literal>) {
          // pre-encode ISO date literals to nanoseconds
          if (x.type == LogicalType::Date && std::holds_alternative<std::string>(x.value)) {
            return lit_date_ns(date_literal_ns(x));
          }
          return nullptr;
        } else if constexpr (std::is_same_v<T, ArithExpr>) {
          const Literal* l = literal_of(x.left);
          const Literal* r = literal_of(x.right);
          if (!l || !r || l->type != r->type) return nullptr;
          if (l->type == LogicalType::Int64) {
            int64_t a = std::get<int64_t>(l->value), b = std::get<int64_t>(r->value), out;
            bool ovf = true;
            switch (x.op) {
              case ArithOp::ADD: ovf = __builtin_add_overflow(a, b, &out); break;
              case ArithOp::SUB: ovf = __builtin_sub_overflow(a, b, &out); break;
              case ArithOp::MUL: ovf = __builtin_mul_overflow(a, b, &out); break;
              case ArithOp::DIV: return nullptr;
            }
            return ovf ? nullptr : lit_i64(out);
          }
          if (l->type == LogicalType::Float64) {
            double a = std::get<double>(l->value), b = std::get<double>(r->value), out = 0;
            switch (x.op) {
              case ArithOp::ADD: out = a + b; break;
              case ArithOp::SUB: out = a - b; break;
              case ArithOp::MUL: out = a * b; break;
              case ArithOp::DIV:
                if (b == 0.0) return nullptr;  // keep the runtime error
                out = a / b;
                break;
            }
            return std::isfinite(out) ? lit_f64(out) : nullptr;
          }
          return nullptr;
        } else if constexpr (std::is_same_v<T, CompareExpr>) {
          const Literal* l = literal_of(x.left);
          const Literal* r = literal_of(x.right);
          if (!l || !r || l->type != r->type) return nullptr;
          int c = compare_literals(*l, *r);
          switch (x.op) {
            case CompareOp::EQ: return lit_bool(c == 0);
            case CompareOp::NE: return lit_bool(c != 0);
            case CompareOp::LT: return lit_bool(c < 0);
            case CompareOp::LE: return lit_bool(c <= 0);
            case CompareOp::GT: return lit_bool(c > 0);
            case CompareOp::GE: return lit_bool(c >= 0);
          }
          return nullptr;
        } else if constexpr (std::is_same_v<T, LogicalExpr>) {
          const Literal* l = literal_of(x.left);
          const Literal* r = literal_of(x.right);
          if (!l || !r || l->type != LogicalType::Bool || r->type != LogicalType::Bool) {
            return nullptr;
          }
          bool a = std::get<bool>(l->value), b = std::get<bool>(r->value);
          return lit_bool(x.op == LogicalOp::AND ? a && b : a || b);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          const Literal* v = literal_of(x.input);
          if (!v || v->type != LogicalType::Bool) return nullptr;
          return lit_bool(!std::get<bool>(v->value));
        } else if constexpr (std::is_same_v<T, BetweenExpr>) {
          const Literal* v = literal_of(x.input);
          const Literal* lo = literal_of(x.lo);
          const Literal* hi = literal_of(x.hi);
          if (!v || !lo || !hi || v->type != lo->type || v->type != hi->type) return nullptr;
          return lit_bool(compare_literals(*v, *lo) >= 0 && compare_literals(*v, *hi) <= 0);
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          const Literal* v = literal_of(x.input);
          if (!v || v->type != LogicalType::Utf8) return nullptr;
          LikeShape shape = parse_like_pattern(x.pattern);
          const std::string& s = std::get<std::string>(v->value);
          bool hit = false;
          switch (shape.anchor) {
            case MatchAnchor::START: hit = s.rfind(shape.literal, 0) == 0; break;
            case MatchAnchor::END:
              hit = s.size() >= shape.literal.size() &&
                    s.compare(s.size() - shape.literal.size(), shape.literal.size(),
                              shape.literal) == 0;
              break;
            case MatchAnchor::ANY: hit = s.find(shape.literal) != std::string::npos; break;
            case MatchAnchor::EXACT: hit = s == shape.literal; break;
          }
          return lit_bool(hit);
        } else {
          return nullptr;
        }
      },
      e->node);
}

// ---- simplify_case ---------------------------------------------------------

ExprPtr simplify_one(const ExprPtr& e) {
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CaseExpr>) {
          if (x.branches.empty()) return nullptr;
          const Literal* first = literal_of(x.branches[0].when);
          if (first && first->type == LogicalType::Bool && std::get<bool>(first->value)) {
            return x.branches[0].then;
          }
          return nullptr;
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          LikeShape shape = parse_like_pattern(x.pattern);
          if (shape.anchor == MatchAnchor::ANY && shape.literal.empty()) {
            return lit_bool(true);
          }
          return nullptr;
        } else {
          return nullptr;
        }
      },
      e->node);
}

// ---- fuse_filters ----------------------------------------------------------

PlanPtr fuse_filters_walk(const PlanPtr& p) {
  return std::visit(
      [&](const auto& x) -> PlanPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScanNode>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, FilterNode>) {
          if (const auto* inner = std::get_if<FilterNode>(&x.input->node)) {
            PlanPtr below = fuse_filters_walk(inner->input);
            // inner predicate ran first; keep that order in the conjunction
            return make_filter(below ? below : inner->input,
                               make_logical(LogicalOp::AND, inner->predicate, x.predicate));
          }
          PlanPtr in = fuse_filters_walk(x.input);
          return in ? make_filter(in, x.predicate) : nullptr;
        } else if constexpr (std::is_same_v<T, ProjectNode>) {
          PlanPtr in = fuse_filters_walk(x.input);
          return in ? make_project(in, x.items) : nullptr;
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          PlanPtr l = fuse_filters_walk(x.left);
          PlanPtr r = fuse_filters_walk(x.right);
          if (!l && !r) return nullptr;
          return make_join(l ? l : x.left, r ? r : x.right, x.left_key, x.right_key);
        } else if constexpr (std::is_same_v<T, AggregateNode>) {
          PlanPtr in = fuse_filters_walk(x.input);
          return in ? make_aggregate(in, x.keys, x.aggs) : nullptr;
        } else if constexpr (std::is_same_v<T, SortNode>) {
          PlanPtr in = fuse_filters_walk(x.input);
          return in ? make_sort(in, x.keys) : nullptr;
        } else if constexpr (std::is_same_v<T, LimitNode>) {
          PlanPtr in = fuse_filters_walk(x.input);
          return in ? make_limit(in, x.count) : nullptr;
        } else {
          return nullptr;
        }
      },
      p->node);
}

// ---- prune_columns ---------------------------------------------------------

struct CiLess {
  bool operator()(const std::string& a, const std::string& b) const {
    return to_lower(a) < to_lower(b);
  }
};
using NameSet = std::set<std::string, CiLess>;

NameSet expr_names(const ExprPtr& e) {
  std::vector<std::string> cols;
  collect_expr_columns(e, cols);
  return NameSet(cols.begin(), cols.end());
}

PlanPtr prune_walk(const PlanPtr& p, const NameSet& demand, const Catalog& catalog,
                   bool is_root, bool& changed) {
  return std::visit(
      [&](const auto& x) -> PlanPtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScanNode>) {
          const TableSchema* table = catalog.find_table(x.table);
          if (!table) return nullptr;
          std::vector<std::string> listed;
          if (x.columns) {
            listed = *x.columns;
          } else {
            for (const auto& c : *table) listed.push_back(c.name);
          }
          std::vector<std::string> needed;
          for (const auto& name : listed) {
            if (demand.count(name)) needed.push_back(name);
          }
          // at least one column survives so downstream row counts exist
          if (needed.empty()) needed.push_back(listed.front());
          if (needed.size() == listed.size()) return nullptr;
          changed = true;
          return make_scan(x.table, needed);
        } else if constexpr (std::is_same_v<T, FilterNode>) {
          NameSet down = demand;
          for (const auto& n : expr_names(x.predicate)) down.insert(n);
          PlanPtr in = prune_walk(x.input, down, catalog, false, changed);
          return in ? make_filter(in, x.predicate) : nullptr;
        } else if constexpr (std::is_same_v<T, ProjectNode>) {
          std::vector<ProjectNode::Item> kept;
          if (is_root) {
            kept = x.items;
          } else {
            for (const auto& item : x.items) {
              if (demand.count(item.name)) kept.push_back(item);
            }
            if (kept.empty()) kept.push_back(x.items.front());
          }
          bool narrowed = kept.size() != x.items.size();
          NameSet down;
          for (const auto& item : kept) {
            for (const auto& n : expr_names(item.expr)) down.insert(n);
          }
          if (down.empty()) {
            // keep one input column alive for the row count
            Schema in_schema = infer_schema(x.input, catalog);
            down.insert(in_schema.front().name);
          }
          PlanPtr in = prune_walk(x.input, down, catalog, false, changed);
          if (!in && !narrowed) return nullptr;
          changed = changed || narrowed;
          return make_project(in ? in : x.input, std::move(kept));
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          Schema left_schema = infer_schema(x.left, catalog);
          Schema right_schema = infer_schema(x.right, catalog);
          NameSet left_demand, right_demand;
          left_demand.insert(x.left_key);
          right_demand.insert(x.right_key);
          for (const auto& c : left_schema) {
            if (demand.count(c.name)) left_demand.insert(c.name);
          }
          for (const auto& c : right_schema) {
            // a colliding right column appears downstream with the _r suffix
            std::string out_name = schema_find(left_schema, c.name) ? c.name + "_r" : c.name;
            if (demand.count(out_name)) right_demand.insert(c.name);
          }
          PlanPtr l = prune_walk(x.left, left_demand, catalog, false, changed);
          PlanPtr r = prune_walk(x.right, right_demand, catalog, false, changed);
          if (!l && !r) return nullptr;
          return make_join(l ? l : x.left, r ? r : x.right, x.left_key, x.right_key);
        } else if constexpr (std::is_same_v<T, AggregateNode>) {
          NameSet down(x.keys.begin(), x.keys.end());
          for (const auto& agg : x.aggs) {
            for (const auto& n : expr_names(agg.expr)) down.insert(n);
          }
          if (down.empty()) {
            Schema in_schema = infer_schema(x.input, catalog);
            down.insert(in_schema.front().name);
          }
          PlanPtr in = prune_walk(x.input, down, catalog, false, changed);
          return in ? make_aggregate(in, x.keys, x.aggs) : nullptr;
        } else if constexpr (std::is_same_v<T, SortNode>) {
          NameSet down = demand;
          for (const auto& k : x.keys) down.insert(k.column);
          PlanPtr in = prune_walk(x.input, down, catalog, false, changed);
          return in ? make_sort(in, x.keys) : nullptr;
        } else if constexpr (std::is_same_v<T, LimitNode>) {
          PlanPtr in = prune_walk(x.input, demand, catalog, false, changed);
          return in ? make_limit(in, x.count) : nullptr;
        } else {
          return nullptr;
        }
      },
      p->node);
}

std::string schema_signature(const Schema& s) {
  std::string out;
  for (const auto& c : s) {
    out += to_lower(c.name);
    out += ':';
    out += logical_type_name(c.type);
    out += ',';
  }
  return out;
}

}  // namespace

Rule fold_constants_rule() {
  return {"fold_constants", [](const PlanPtr& p, const Catalog&) -> std::optional<PlanPtr> {
            PlanPtr out = rewrite_plan_exprs(p, fold_one);
            if (!out) return std::nullopt;
            return out;
          }};
}

Rule fuse_filters_rule() {
  return {"fuse_filters", [](const PlanPtr& p, const Catalog&) -> std::optional<PlanPtr> {
            PlanPtr out = fuse_filters_walk(p);
            if (!out) return std::nullopt;
            return out;
          }};
}

Rule simplify_case_rule() {
  return {"simplify_case", [](const PlanPtr& p, const Catalog&) -> std::optional<PlanPtr> {
            PlanPtr out = rewrite_plan_exprs(p, simplify_one);
            if (!out) return std::nullopt;
            return out;
          }};
}

Rule prune_columns_rule() {
  return {"prune_columns", [](const PlanPtr& p, const Catalog& catalog) -> std::optional<PlanPtr> {
            Schema root = infer_schema(p, catalog);
            NameSet demand;
            for (const auto& c : root) demand.insert(c.name);
            bool changed = false;
            PlanPtr out = prune_walk(p, demand, catalog, true, changed);
            if (!out || !changed) return std::nullopt;
            return out;
          }};
}

const std::vector<Rule>& default_rules() {
  static const std::vector<Rule> rules = {fold_constants_rule(), fuse_filters_rule(),
                                          simplify_case_rule(), prune_columns_rule()};
  return rules;
}

PlanPtr optimize(const PlanPtr& plan, const Catalog& catalog, const std::vector<Rule>& rules,
                 int max_passes, int* passes_used) {
  PlanPtr current = plan;
  std::string want = schema_signature(infer_schema(plan, catalog));
  int pass = 0;
  for (; pass < max_passes; ++pass) {
    bool fired = false;
    for (const auto& rule : rules) {
      if (auto next = rule.rewrite(current, catalog)) {
        std::string got = schema_signature(infer_schema(*next, catalog));
        if (got != want) {
          throw PlanError("optimizer: rule '" + rule.name + "' changed the plan schema from [" +
                          want + "] to [" + got + "]");
        }
        current = *next;
        fired = true;
      }
    }
    if (!fired) break;
  }
  if (passes_used) *passes_used = pass + (pass < max_passes ? 1 : 0);
  auto diags = validate(current, catalog);
  if (!diags.empty()) {
    throw PlanError("optimizer: optimized plan fails validation at " + diags[0].path + ": " +
                    diags[0].message);
  }
  return current;
}

}  // namespace tensql

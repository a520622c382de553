#include <algorithm>
#include <set>

#include "tensql/sql.hpp"
#include "tensql/strings.hpp"

namespace tensql::sql {

namespace {

struct PlannerCtx {
  const Catalog& catalog;
  Schema schema;          // resolution schema for the current expression scope
  bool allow_aggs = false;

  // filled while converting select expressions in aggregate mode
  std::vector<AggregateNode::Agg>* agg_out = nullptr;
  const Schema* agg_input_schema = nullptr;
};

LogicalType type_of(const ExprPtr& e, const PlannerCtx& ctx, size_t offset) {
  try {
    return infer_expr_type(e, ctx.schema, ctx.catalog);
  } catch (const PlanError& err) {
    throw SqlError(err.what(), offset);
  }
}

bool is_int_literal(const ExprPtr& e) {
  const auto* lit = std::get_if<Literal>(&e->node);
  return lit && lit->type == LogicalType::Int64;
}

// SQL-style convenience: an integer literal used against a float operand
// becomes a float literal.
ExprPtr coerce_literal(ExprPtr e, LogicalType want) {
  if (want == LogicalType::Float64 && is_int_literal(e)) {
    return lit_f64(static_cast<double>(std::get<int64_t>(std::get<Literal>(e->node).value)));
  }
  return e;
}

void coerce_pair(ExprPtr& l, ExprPtr& r, const PlannerCtx& ctx, size_t offset) {
  LogicalType lt = type_of(l, ctx, offset);
  LogicalType rt = type_of(r, ctx, offset);
  if (lt == rt) return;
  if (lt == LogicalType::Float64 && is_int_literal(r)) r = coerce_literal(r, lt);
  if (rt == LogicalType::Float64 && is_int_literal(l)) l = coerce_literal(l, rt);
}

ExprPtr convert_expr(const AstExprPtr& ast, PlannerCtx& ctx);

ExprPtr convert_case(const AstCase& c, size_t offset, PlannerCtx& ctx) {
  std::vector<CaseExpr::Branch> branches;
  for (const auto& br : c.branches) {
    branches.push_back({convert_expr(br.when, ctx), convert_expr(br.then, ctx)});
  }
  ExprPtr else_value = convert_expr(c.else_value, ctx);
  bool any_float = false;
  for (const auto& br : branches) {
    if (type_of(br.then, ctx, offset) == LogicalType::Float64) any_float = true;
  }
  if (type_of(else_value, ctx, offset) == LogicalType::Float64) any_float = true;
  if (any_float) {
    for (auto& br : branches) br.then = coerce_literal(br.then, LogicalType::Float64);
    else_value = coerce_literal(else_value, LogicalType::Float64);
  }
  return make_case(std::move(branches), std::move(else_value));
}

ExprPtr convert_expr(const AstExprPtr& ast, PlannerCtx& ctx) {
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        size_t off = ast->offset;
        if constexpr (std::is_same_v<T, AstCol>) {
          if (!schema_find(ctx.schema, x.name)) {
            if (ctx.agg_input_schema && schema_find(*ctx.agg_input_schema, x.name)) {
              throw SqlError(
                  "column '" + x.name + "' must appear in GROUP BY or inside an aggregate", off);
            }
            throw SqlError("unknown column '" + x.name + "'", off);
          }
          return col(x.name);
        } else if constexpr (std::is_same_v<T, AstLit>) {
          return std::make_shared<const Expr>(Expr{Literal{x.type, x.value}});
        } else if constexpr (std::is_same_v<T, AstArith>) {
          ExprPtr l = convert_expr(x.left, ctx);
          ExprPtr r = convert_expr(x.right, ctx);
          coerce_pair(l, r, ctx, off);
          // Integer division is not supported by the kernel set; promote a
          // pair of integer literals rather than erroring on e.g. 1/2.
          if (x.op == ArithOp::DIV && is_int_literal(l) && is_int_literal(r)) {
            l = coerce_literal(l, LogicalType::Float64);
            r = coerce_literal(r, LogicalType::Float64);
          }
          ExprPtr e = make_arith(x.op, std::move(l), std::move(r));
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstCompare>) {
          ExprPtr l = convert_expr(x.left, ctx);
          ExprPtr r = convert_expr(x.right, ctx);
          coerce_pair(l, r, ctx, off);
          ExprPtr e = make_compare(x.op, std::move(l), std::move(r));
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstLogical>) {
          ExprPtr e = make_logical(x.op, convert_expr(x.left, ctx), convert_expr(x.right, ctx));
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstNot>) {
          ExprPtr e = make_not(convert_expr(x.input, ctx));
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstBetween>) {
          ExprPtr v = convert_expr(x.input, ctx);
          ExprPtr lo = convert_expr(x.lo, ctx);
          ExprPtr hi = convert_expr(x.hi, ctx);
          LogicalType vt = type_of(v, ctx, off);
          lo = coerce_literal(lo, vt);
          hi = coerce_literal(hi, vt);
          ExprPtr e = make_between(std::move(v), std::move(lo), std::move(hi));
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstCase>) {
          ExprPtr e = convert_case(x, off, ctx);
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstLike>) {
          ExprPtr e = make_like(convert_expr(x.input, ctx), x.pattern);
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstPredict>) {
          if (!ctx.catalog.find_model(x.model)) {
            throw SqlError("unknown model '" + x.model + "'", off);
          }
          std::vector<ExprPtr> args;
          for (const auto& a : x.args) {
            ExprPtr arg = convert_expr(a, ctx);
            args.push_back(coerce_literal(arg, LogicalType::Float64));
          }
          ExprPtr e = make_predict(x.model, std::move(args));
          type_of(e, ctx, off);
          return e;
        } else if constexpr (std::is_same_v<T, AstAggCall>) {
          if (!ctx.allow_aggs || !ctx.agg_out) {
            throw SqlError("aggregate functions are only allowed in the select list", off);
          }
          ExprPtr inner;
          {
            // aggregate arguments see the pre-aggregation schema and may not
            // nest further aggregates
            PlannerCtx arg_ctx{ctx.catalog, *ctx.agg_input_schema, false, nullptr, nullptr};
            inner = x.star ? lit_i64(1) : convert_expr(x.arg, arg_ctx);
          }
          LogicalType inner_type = type_of(inner, {ctx.catalog, *ctx.agg_input_schema}, off);
          LogicalType out_type = inner_type;
          if (x.fn == AggFn::Count) out_type = LogicalType::Int64;
          if (x.fn == AggFn::Avg) out_type = LogicalType::Float64;
          std::string name = "$agg" + std::to_string(ctx.agg_out->size());
          ctx.agg_out->push_back({name, x.fn, std::move(inner)});
          // the invented slot becomes visible to the surrounding expression
          ctx.schema.push_back({name, out_type});
          return col(name);
        } else {
          throw SqlError("unsupported expression", off);
        }
      },
      ast->node);
}

bool contains_agg(const AstExprPtr& e) {
  if (!e) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, AstAggCall>) {
          return true;
        } else if constexpr (std::is_same_v<T, AstArith> || std::is_same_v<T, AstCompare> ||
                             std::is_same_v<T, AstLogical>) {
          return contains_agg(x.left) || contains_agg(x.right);
        } else if constexpr (std::is_same_v<T, AstNot>) {
          return contains_agg(x.input);
        } else if constexpr (std::is_same_v<T, AstBetween>) {
          return contains_agg(x.input) || contains_agg(x.lo) || contains_agg(x.hi);
        } else if constexpr (std::is_same_v<T, AstCase>) {
          for (const auto& br : x.branches) {
            if (contains_agg(br.when) || contains_agg(br.then)) return true;
          }
          return contains_agg(x.else_value);
        } else if constexpr (std::is_same_v<T, AstLike>) {
          return contains_agg(x.input);
        } else if constexpr (std::is_same_v<T, AstPredict>) {
          for (const auto& a : x.args) {
            if (contains_agg(a)) return true;
          }
          return false;
        } else {
          return false;
        }
      },
      e->node);
}

void collect_columns(const ExprPtr& e, std::vector<std::string>& out) {
  if (!e) return;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ColRef>) {
          out.push_back(x.name);
        } else if constexpr (std::is_same_v<T, ArithExpr> || std::is_same_v<T, CompareExpr> ||
                             std::is_same_v<T, LogicalExpr>) {
          collect_columns(x.left, out);
          collect_columns(x.right, out);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          collect_columns(x.input, out);
        } else if constexpr (std::is_same_v<T, BetweenExpr>) {
          collect_columns(x.input, out);
          collect_columns(x.lo, out);
          collect_columns(x.hi, out);
        } else if constexpr (std::is_same_v<T, CaseExpr>) {
          for (const auto& br : x.branches) {
            collect_columns(br.when, out);
            collect_columns(br.then, out);
          }
          collect_columns(x.else_value, out);
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          collect_columns(x.input, out);
        } else if constexpr (std::is_same_v<T, PredictExpr>) {
          for (const auto& a : x.args) collect_columns(a, out);
        }
      },
      e->node);
}

// Splits a predicate into top-level conjuncts, textual order.
void split_conjuncts(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (const auto* lg = std::get_if<LogicalExpr>(&e->node); lg && lg->op == LogicalOp::AND) {
    split_conjuncts(lg->left, out);
    split_conjuncts(lg->right, out);
    return;
  }
  out.push_back(e);
}

ExprPtr and_chain(const std::vector<ExprPtr>& conjuncts) {
  ExprPtr acc = conjuncts[0];
  for (size_t i = 1; i < conjuncts.size(); ++i) {
    acc = make_logical(LogicalOp::AND, acc, conjuncts[i]);
  }
  return acc;
}

std::string derived_item_name(const AstExprPtr& e, size_t index) {
  if (const auto* c = std::get_if<AstCol>(&e->node)) return c->name;
  return "_c" + std::to_string(index);
}

}  // namespace

PlanPtr plan(const Ast& ast, const Catalog& catalog) {
  const TableSchema* t1 = catalog.find_table(ast.from.name);
  if (!t1) throw SqlError("unknown table '" + ast.from.name + "'", ast.from.offset);

  const TableRef* second = nullptr;
  if (ast.comma_table) second = &*ast.comma_table;
  if (ast.join_table) second = &*ast.join_table;
  const TableSchema* t2 = nullptr;
  if (second) {
    if (iequals(second->name, ast.from.name)) {
      throw SqlError("self-joins are not supported", second->offset);
    }
    t2 = catalog.find_table(second->name);
    if (!t2) throw SqlError("unknown table '" + second->name + "'", second->offset);
  }

  // Resolution schema: both tables' columns; names appearing in both tables
  // would be ambiguous, so reject queries over such pairs outright.
  Schema all = *t1;
  if (t2) {
    for (const auto& c : *t2) {
      if (schema_find(*t1, c.name)) {
        throw SqlError("column '" + c.name + "' exists in both tables; queries over ambiguous "
                       "schemas are not supported",
                       second->offset);
      }
      all.push_back(c);
    }
  }

  auto side_of = [&](const std::string& name) { return schema_find(*t1, name) ? 0 : 1; };

  // WHERE conjuncts
  PlannerCtx where_ctx{catalog, all, false, nullptr, nullptr};
  std::vector<ExprPtr> conjuncts;
  if (ast.where) {
    if (contains_agg(ast.where)) {
      throw SqlError("aggregate functions are not allowed in WHERE", ast.where->offset);
    }
    split_conjuncts(convert_expr(ast.where, where_ctx), conjuncts);
  }

  // Join keys: from the ON clause, or the first cross-table equality in WHERE.
  std::string left_key, right_key;
  bool have_join_keys = false;
  auto try_extract_keys = [&](const ExprPtr& e) {
    const auto* cmp = std::get_if<CompareExpr>(&e->node);
    if (!cmp || cmp->op != CompareOp::EQ) return false;
    const auto* lc = std::get_if<ColRef>(&cmp->left->node);
    const auto* rc = std::get_if<ColRef>(&cmp->right->node);
    if (!lc || !rc) return false;
    int ls = side_of(lc->name), rs = side_of(rc->name);
    if (ls == rs) return false;
    left_key = ls == 0 ? lc->name : rc->name;
    right_key = ls == 0 ? rc->name : lc->name;
    return true;
  };

  if (ast.join_table) {
    if (contains_agg(ast.join_on)) {
      throw SqlError("aggregate functions are not allowed in ON", ast.join_on->offset);
    }
    ExprPtr on = convert_expr(ast.join_on, where_ctx);
    if (!try_extract_keys(on)) {
      throw SqlError(
          "JOIN ... ON must be a single equality between one column of each table",
          ast.join_on->offset);
    }
    have_join_keys = true;
  }

  std::vector<ExprPtr> side_filters[2];
  std::vector<ExprPtr> residual;
  for (const auto& c : conjuncts) {
    if (t2 && !have_join_keys && try_extract_keys(c)) {
      have_join_keys = true;
      continue;  // consumed as the join condition
    }
    std::vector<std::string> cols;
    collect_columns(c, cols);
    bool s0 = false, s1 = false;
    for (const auto& name : cols) {
      (side_of(name) == 0 ? s0 : s1) = true;
    }
    if (s1 && !s0) {
      side_filters[1].push_back(c);
    } else if (s0 && s1) {
      residual.push_back(c);
    } else {
      side_filters[0].push_back(c);  // left-only and constant-only conjuncts
    }
  }

  if (t2 && !have_join_keys) {
    throw SqlError("comma join requires an equality predicate between the two tables "
                   "(cross products are not supported)",
                   second->offset);
  }

  PlanPtr left = make_scan(ast.from.name);
  if (!side_filters[0].empty()) left = make_filter(left, and_chain(side_filters[0]));
  PlanPtr root = left;
  if (t2) {
    PlanPtr right = make_scan(second->name);
    if (!side_filters[1].empty()) right = make_filter(right, and_chain(side_filters[1]));
    root = make_join(left, right, left_key, right_key);
    if (!residual.empty()) root = make_filter(root, and_chain(residual));
  }

  // Aggregate mode if the select list mentions an aggregate or GROUP BY given.
  bool agg_mode = !ast.group_by.empty();
  for (const auto& item : ast.select) agg_mode = agg_mode || contains_agg(item.expr);

  std::vector<ProjectNode::Item> project_items;
  if (agg_mode) {
    std::vector<std::string> keys;
    for (const auto& [name, offset] : ast.group_by) {
      if (!schema_find(all, name)) throw SqlError("unknown column '" + name + "'", offset);
      keys.push_back(name);
    }
    std::vector<AggregateNode::Agg> aggs;
    // select expressions see the post-aggregation schema: keys + $agg slots
    Schema post;
    for (const auto& k : keys) post.push_back(*schema_find(all, k));

    PlannerCtx sel_ctx{catalog, post, true, &aggs, &all};
    for (size_t i = 0; i < ast.select.size(); ++i) {
      const auto& item = ast.select[i];
      ExprPtr e = convert_expr(item.expr, sel_ctx);
      type_of(e, sel_ctx, item.expr->offset);
      project_items.push_back(
          {item.alias ? *item.alias : derived_item_name(item.expr, i), std::move(e)});
    }
    if (aggs.empty()) {
      throw SqlError("grouped query needs at least one aggregate (DISTINCT is not supported)",
                     ast.from.offset);
    }
    root = make_aggregate(root, std::move(keys), std::move(aggs));
  } else {
    PlannerCtx sel_ctx{catalog, all, false, nullptr, nullptr};
    for (size_t i = 0; i < ast.select.size(); ++i) {
      const auto& item = ast.select[i];
      project_items.push_back({item.alias ? *item.alias : derived_item_name(item.expr, i),
                               convert_expr(item.expr, sel_ctx)});
    }
  }
  root = make_project(root, std::move(project_items));
  if (ast.limit) root = make_limit(root, *ast.limit);
  return root;
}

PlanPtr parse_and_plan(const std::string& sql, const Catalog& catalog) {
  return plan(parse(sql), catalog);
}

}  // namespace tensql::sql

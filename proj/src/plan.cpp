#include "tensql/plan.hpp"

#include <algorithm>

#include "tensql/strings.hpp"

namespace tensql {

namespace {

template <typename T>
PlanPtr make_node(T&& node) {
  return std::make_shared<const PlanNode>(PlanNode{std::forward<T>(node)});
}

[[noreturn]] void fail(const std::string& msg) { throw PlanError(msg); }

}  // namespace

const char* plan_tag(const PlanNode& p) {
  return std::visit(
      [](const auto& n) -> const char* {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ScanNode>) return "scan";
        if constexpr (std::is_same_v<T, FilterNode>) return "filter";
        if constexpr (std::is_same_v<T, ProjectNode>) return "project";
        if constexpr (std::is_same_v<T, JoinNode>) return "join";
        if constexpr (std::is_same_v<T, AggregateNode>) return "aggregate";
        if constexpr (std::is_same_v<T, SortNode>) return "sort";
        if constexpr (std::is_same_v<T, LimitNode>) return "limit";
        return "?";
      },
      p.node);
}

const char* agg_fn_name(AggFn fn) {
  switch (fn) {
    case AggFn::Sum: return "sum";
    case AggFn::Count: return "count";
    case AggFn::Avg: return "avg";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
  }
  return "?";
}

PlanPtr make_scan(std::string table, std::optional<std::vector<std::string>> columns) {
  return make_node(ScanNode{std::move(table), std::move(columns)});
}
PlanPtr make_filter(PlanPtr input, ExprPtr predicate) {
  return make_node(FilterNode{std::move(input), std::move(predicate)});
}
PlanPtr make_project(PlanPtr input, std::vector<ProjectNode::Item> items) {
  return make_node(ProjectNode{std::move(input), std::move(items)});
}
PlanPtr make_join(PlanPtr left, PlanPtr right, std::string left_key, std::string right_key) {
  return make_node(JoinNode{std::move(left), std::move(right), std::move(left_key),
                            std::move(right_key), JoinKind::Inner});
}
PlanPtr make_aggregate(PlanPtr input, std::vector<std::string> keys,
                       std::vector<AggregateNode::Agg> aggs) {
  return make_node(AggregateNode{std::move(input), std::move(keys), std::move(aggs)});
}
PlanPtr make_sort(PlanPtr input, std::vector<SortNode::Key> keys) {
  return make_node(SortNode{std::move(input), std::move(keys)});
}
PlanPtr make_limit(PlanPtr input, int64_t count) {
  return make_node(LimitNode{std::move(input), count});
}

bool plan_equal(const PlanPtr& a, const PlanPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, ScanNode>) {
          return x.table == y.table && x.columns == y.columns;
        } else if constexpr (std::is_same_v<T, FilterNode>) {
          return plan_equal(x.input, y.input) && expr_equal(x.predicate, y.predicate);
        } else if constexpr (std::is_same_v<T, ProjectNode>) {
          if (x.items.size() != y.items.size() || !plan_equal(x.input, y.input)) return false;
          for (size_t i = 0; i < x.items.size(); ++i) {
            if (x.items[i].name != y.items[i].name ||
                !expr_equal(x.items[i].expr, y.items[i].expr)) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          return x.kind == y.kind && x.left_key == y.left_key && x.right_key == y.right_key &&
                 plan_equal(x.left, y.left) && plan_equal(x.right, y.right);
        } else if constexpr (std::is_same_v<T, AggregateNode>) {
          if (x.keys != y.keys || x.aggs.size() != y.aggs.size() ||
              !plan_equal(x.input, y.input)) {
            return false;
          }
          for (size_t i = 0; i < x.aggs.size(); ++i) {
            if (x.aggs[i].name != y.aggs[i].name || x.aggs[i].fn != y.aggs[i].fn ||
                !expr_equal(x.aggs[i].expr, y.aggs[i].expr)) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<T, SortNode>) {
          if (x.keys.size() != y.keys.size() || !plan_equal(x.input, y.input)) return false;
          for (size_t i = 0; i < x.keys.size(); ++i) {
            if (x.keys[i].column != y.keys[i].column ||
                x.keys[i].ascending != y.keys[i].ascending) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<T, LimitNode>) {
          return x.count == y.count && plan_equal(x.input, y.input);
        } else {
          return false;
        }
      },
      a->node);
}

const ColumnSpec* schema_find(const Schema& s, std::string_view name) {
  for (const auto& c : s) {
    if (iequals(c.name, name)) return &c;
  }
  return nullptr;
}

int schema_index(const Schema& s, std::string_view name) {
  for (size_t i = 0; i < s.size(); ++i) {
    if (iequals(s[i].name, name)) return static_cast<int>(i);
  }
  return -1;
}

const TableSchema* Catalog::find_table(std::string_view name) const {
  for (const auto& [n, s] : tables) {
    if (iequals(n, name)) return &s;
  }
  return nullptr;
}

const ModelSpec* Catalog::find_model(std::string_view name) const {
  for (const auto& [n, m] : models) {
    if (iequals(n, name)) return &m;
  }
  return nullptr;
}

void Catalog::add_table(std::string name, TableSchema schema) {
  if (find_table(name)) fail("catalog: duplicate table '" + name + "'");
  tables.emplace_back(std::move(name), std::move(schema));
}

void Catalog::register_model(std::string name, ModelSpec spec) {
  if (find_model(name)) fail("catalog: duplicate model '" + name + "'");
  validate_model(spec);
  models.emplace_back(std::move(name), std::move(spec));
}

namespace {

bool is_numeric(LogicalType t) { return t == LogicalType::Int64 || t == LogicalType::Float64; }

void check_unique_names(const Schema& s, const char* what) {
  for (size_t i = 0; i < s.size(); ++i) {
    for (size_t j = i + 1; j < s.size(); ++j) {
      if (iequals(s[i].name, s[j].name)) {
        fail(std::string(what) + ": duplicate output name '" + s[j].name + "'");
      }
    }
  }
}

}  // namespace

LogicalType infer_expr_type(const ExprPtr& e, const Schema& input, const Catalog& catalog) {
  if (!e) fail("expression is null");
  return std::visit(
      [&](const auto& x) -> LogicalType {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ColRef>) {
          const ColumnSpec* c = schema_find(input, x.name);
          if (!c) fail("unresolved column '" + x.name + "'");
          return c->type;
        } else if constexpr (std::is_same_v<T, Literal>) {
          if (x.type == LogicalType::Date) date_literal_ns(x);  // validates the ISO form
          return x.type;
        } else if constexpr (std::is_same_v<T, ArithExpr>) {
          LogicalType l = infer_expr_type(x.left, input, catalog);
          LogicalType r = infer_expr_type(x.right, input, catalog);
          if (l != r) {
            fail(std::string("arith operands differ: ") + logical_type_name(l) + " vs " +
                 logical_type_name(r));
          }
          if (!is_numeric(l)) fail("arith requires int64 or float64 operands");
          if (x.op == ArithOp::DIV && l != LogicalType::Float64) {
            fail("division requires float64 operands");
          }
          return l;
        } else if constexpr (std::is_same_v<T, CompareExpr>) {
          LogicalType l = infer_expr_type(x.left, input, catalog);
          LogicalType r = infer_expr_type(x.right, input, catalog);
          if (l != r) {
            fail(std::string("compare operands differ: ") + logical_type_name(l) + " vs " +
                 logical_type_name(r));
          }
          return LogicalType::Bool;
        } else if constexpr (std::is_same_v<T, LogicalExpr>) {
          if (infer_expr_type(x.left, input, catalog) != LogicalType::Bool ||
              infer_expr_type(x.right, input, catalog) != LogicalType::Bool) {
            fail("logical operands must be bool");
          }
          return LogicalType::Bool;
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          if (infer_expr_type(x.input, input, catalog) != LogicalType::Bool) {
            fail("NOT requires a bool operand");
          }
          return LogicalType::Bool;
        } else if constexpr (std::is_same_v<T, BetweenExpr>) {
          LogicalType v = infer_expr_type(x.input, input, catalog);
          LogicalType lo = infer_expr_type(x.lo, input, catalog);
          LogicalType hi = infer_expr_type(x.hi, input, catalog);
          if (v != lo || v != hi) fail("BETWEEN operands must share one type");
          return LogicalType::Bool;
        } else if constexpr (std::is_same_v<T, CaseExpr>) {
          if (x.branches.empty()) fail("CASE requires at least one WHEN branch");
          if (!x.else_value) fail("CASE requires an ELSE value");
          LogicalType out = infer_expr_type(x.branches[0].then, input, catalog);
          for (const auto& br : x.branches) {
            if (infer_expr_type(br.when, input, catalog) != LogicalType::Bool) {
              fail("CASE WHEN condition must be bool");
            }
            if (infer_expr_type(br.then, input, catalog) != out) {
              fail("CASE branches must share one result type");
            }
          }
          if (infer_expr_type(x.else_value, input, catalog) != out) {
            fail("CASE ELSE must match the branch result type");
          }
          return out;
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          if (infer_expr_type(x.input, input, catalog) != LogicalType::Utf8) {
            fail("LIKE requires Utf8");
          }
          parse_like_pattern(x.pattern);
          return LogicalType::Bool;
        } else if constexpr (std::is_same_v<T, PredictExpr>) {
          const ModelSpec* model = catalog.find_model(x.model);
          if (!model) fail("unknown model '" + x.model + "'");
          int want = model->feature_count();
          if (static_cast<int>(x.args.size()) != want) {
            fail("PREDICT(" + x.model + ") expects " + std::to_string(want) +
                 " arguments, got " + std::to_string(x.args.size()));
          }
          for (const auto& a : x.args) {
            if (infer_expr_type(a, input, catalog) != LogicalType::Float64) {
              fail("PREDICT arguments must be float64");
            }
          }
          return LogicalType::Float64;
        } else {
          fail("unknown expression");
        }
      },
      e->node);
}

Schema infer_schema(const PlanPtr& plan, const Catalog& catalog) {
  if (!plan) fail("plan is null");
  return std::visit(
      [&](const auto& x) -> Schema {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScanNode>) {
          const TableSchema* t = catalog.find_table(x.table);
          if (!t) fail("unknown table '" + x.table + "'");
          if (!x.columns) return *t;
          Schema out;
          for (const auto& name : *x.columns) {
            const ColumnSpec* c = schema_find(*t, name);
            if (!c) fail("scan of '" + x.table + "': unknown column '" + name + "'");
            out.push_back(*c);
          }
          check_unique_names(out, "scan");
          if (out.empty()) fail("scan column list must not be empty");
          return out;
        } else if constexpr (std::is_same_v<T, FilterNode>) {
          Schema in = infer_schema(x.input, catalog);
          if (infer_expr_type(x.predicate, in, catalog) != LogicalType::Bool) {
            fail("filter predicate must be bool");
          }
          return in;
        } else if constexpr (std::is_same_v<T, ProjectNode>) {
          Schema in = infer_schema(x.input, catalog);
          if (x.items.empty()) fail("project requires at least one column");
          Schema out;
          for (const auto& item : x.items) {
            out.push_back({item.name, infer_expr_type(item.expr, in, catalog)});
          }
          check_unique_names(out, "project");
          return out;
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          Schema l = infer_schema(x.left, catalog);
          Schema r = infer_schema(x.right, catalog);
          const ColumnSpec* lk = schema_find(l, x.left_key);
          if (!lk) fail("join: left key '" + x.left_key + "' not found");
          const ColumnSpec* rk = schema_find(r, x.right_key);
          if (!rk) fail("join: right key '" + x.right_key + "' not found");
          if (lk->type != rk->type) {
            fail(std::string("join: key types differ: ") + logical_type_name(lk->type) + " vs " +
                 logical_type_name(rk->type));
          }
          if (lk->type == LogicalType::Utf8) fail("join: utf8 keys are not supported");
          Schema out = l;
          for (const auto& c : r) {
            std::string name = c.name;
            if (schema_find(l, name)) name += "_r";
            out.push_back({std::move(name), c.type});
          }
          check_unique_names(out, "join");
          return out;
        } else if constexpr (std::is_same_v<T, AggregateNode>) {
          Schema in = infer_schema(x.input, catalog);
          Schema out;
          for (const auto& k : x.keys) {
            const ColumnSpec* c = schema_find(in, k);
            if (!c) fail("group key '" + k + "' not found");
            out.push_back(*c);
          }
          if (x.aggs.empty()) fail("aggregate requires at least one aggregate function");
          for (const auto& agg : x.aggs) {
            LogicalType t = infer_expr_type(agg.expr, in, catalog);
            LogicalType result;
            switch (agg.fn) {
              case AggFn::Count: result = LogicalType::Int64; break;
              case AggFn::Avg:
                if (!is_numeric(t)) fail("avg requires a numeric argument");
                result = LogicalType::Float64;
                break;
              case AggFn::Sum:
                if (!is_numeric(t)) fail("sum requires a numeric argument");
                result = t;
                break;
              case AggFn::Min:
              case AggFn::Max:
                if (!is_numeric(t) && t != LogicalType::Date) {
                  fail(std::string(agg_fn_name(agg.fn)) + " requires a numeric or date argument");
                }
                result = t;
                break;
              default: fail("bad aggregate");
            }
            out.push_back({agg.name, result});
          }
          check_unique_names(out, "aggregate");
          return out;
        } else if constexpr (std::is_same_v<T, SortNode>) {
          Schema in = infer_schema(x.input, catalog);
          if (x.keys.empty()) fail("sort requires at least one key");
          for (const auto& k : x.keys) {
            if (!schema_find(in, k.column)) fail("sort key '" + k.column + "' not found");
          }
          return in;
        } else if constexpr (std::is_same_v<T, LimitNode>) {
          if (x.count < 0) fail("limit must be non-negative");
          return infer_schema(x.input, catalog);
        } else {
          fail("unknown plan node");
        }
      },
      plan->node);
}

namespace {

// Walks children first; a node is only checked when all children inferred.
bool validate_walk(const PlanPtr& plan, const Catalog& catalog, const std::string& path,
                   std::vector<Diagnostic>& out) {
  if (!plan) {
    out.push_back({path, "node is null"});
    return false;
  }
  std::string here = path.empty() ? plan_tag(*plan) : path + "." + plan_tag(*plan);
  bool children_ok = std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScanNode>) {
          return true;
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          bool l = validate_walk(x.left, catalog, here + ".left", out);
          bool r = validate_walk(x.right, catalog, here + ".right", out);
          return l && r;
        } else {
          const PlanPtr* child = nullptr;
          if constexpr (std::is_same_v<T, FilterNode>) child = &x.input;
          if constexpr (std::is_same_v<T, ProjectNode>) child = &x.input;
          if constexpr (std::is_same_v<T, AggregateNode>) child = &x.input;
          if constexpr (std::is_same_v<T, SortNode>) child = &x.input;
          if constexpr (std::is_same_v<T, LimitNode>) child = &x.input;
          return validate_walk(*child, catalog, here + ".input", out);
        }
      },
      plan->node);
  if (!children_ok) return false;
  try {
    // Infer only this node, reusing the full recursion (children are known
    // good, so any error raised belongs to this node).
    infer_schema(plan, catalog);
    return true;
  } catch (const PlanError& e) {
    out.push_back({here, e.what()});
    return false;
  } catch (const EncodingError& e) {
    out.push_back({here, e.what()});
    return false;
  }
}

}  // namespace

std::vector<Diagnostic> validate(const PlanPtr& plan, const Catalog& catalog) {
  std::vector<Diagnostic> out;
  validate_walk(plan, catalog, "", out);
  return out;
}

namespace {

void postorder_walk(const PlanPtr& plan, std::vector<const PlanNode*>& out) {
  if (!plan) return;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScanNode>) {
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          postorder_walk(x.left, out);
          postorder_walk(x.right, out);
        } else if constexpr (std::is_same_v<T, FilterNode>) {
          postorder_walk(x.input, out);
        } else if constexpr (std::is_same_v<T, ProjectNode>) {
          postorder_walk(x.input, out);
        } else if constexpr (std::is_same_v<T, AggregateNode>) {
          postorder_walk(x.input, out);
        } else if constexpr (std::is_same_v<T, SortNode>) {
          postorder_walk(x.input, out);
        } else if constexpr (std::is_same_v<T, LimitNode>) {
          postorder_walk(x.input, out);
        }
      },
      plan->node);
  out.push_back(plan.get());
}

}  // namespace

std::vector<const PlanNode*> plan_nodes_postorder(const PlanPtr& plan) {
  std::vector<const PlanNode*> out;
  postorder_walk(plan, out);
  return out;
}

void collect_expr_columns(const ExprPtr& e, std::vector<std::string>& out) {
  if (!e) return;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ColRef>) {
          out.push_back(x.name);
        } else if constexpr (std::is_same_v<T, ArithExpr> || std::is_same_v<T, CompareExpr> ||
                             std::is_same_v<T, LogicalExpr>) {
          collect_expr_columns(x.left, out);
          collect_expr_columns(x.right, out);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          collect_expr_columns(x.input, out);
        } else if constexpr (std::is_same_v<T, BetweenExpr>) {
          collect_expr_columns(x.input, out);
          collect_expr_columns(x.lo, out);
          collect_expr_columns(x.hi, out);
        } else if constexpr (std::is_same_v<T, CaseExpr>) {
          for (const auto& br : x.branches) {
            collect_expr_columns(br.when, out);
            collect_expr_columns(br.then, out);
          }
          collect_expr_columns(x.else_value, out);
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          collect_expr_columns(x.input, out);
        } else if constexpr (std::is_same_v<T, PredictExpr>) {
          for (const auto& a : x.args) collect_expr_columns(a, out);
        }
      },
      e->node);
}

}  // namespace tensql

#include "tensql/plan_json.hpp"

#include <nlohmann/json.hpp>

namespace tensql {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw PlanError("plan json: " + msg); }

json expr_json(const ExprPtr& e);

json literal_json(const Literal& lit) {
  json j{{"expr", "lit"}, {"type", logical_type_name(lit.type)}};
  switch (lit.type) {
    case LogicalType::Bool: j["value"] = std::get<bool>(lit.value); break;
    case LogicalType::Int64: j["value"] = std::get<int64_t>(lit.value); break;
    case LogicalType::Float64: j["value"] = std::get<double>(lit.value); break;
    case LogicalType::Utf8: j["value"] = std::get<std::string>(lit.value); break;
    case LogicalType::Date: j["value"] = decode_date(date_literal_ns(lit)); break;
  }
  return j;
}

json expr_json(const ExprPtr& e) {
  if (!e) fail("null expression");
  return std::visit(
      [&](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ColRef>) {
          return json{{"expr", "col"}, {"name", x.name}};
        } else if constexpr (std::is_same_v<T, Literal>) {
          return literal_json(x);
        } else if constexpr (std::is_same_v<T, ArithExpr>) {
          return json{{"expr", "arith"},
                      {"op", arith_op_name(x.op)},
                      {"left", expr_json(x.left)},
                      {"right", expr_json(x.right)}};
        } else if constexpr (std::is_same_v<T, CompareExpr>) {
          return json{{"expr", "cmp"},
                      {"op", compare_op_name(x.op)},
                      {"left", expr_json(x.left)},
                      {"right", expr_json(x.right)}};
        } else if constexpr (std::is_same_v<T, LogicalExpr>) {
          return json{{"expr", "logical"},
                      {"op", logical_op_name(x.op)},
                      {"left", expr_json(x.left)},
                      {"right", expr_json(x.right)}};
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          return json{{"expr", "not"}, {"input", expr_json(x.input)}};
        } else if constexpr (std::is_same_v<T, BetweenExpr>) {
          return json{{"expr", "between"},
                      {"input", expr_json(x.input)},
                      {"lo", expr_json(x.lo)},
                      {"hi", expr_json(x.hi)}};
        } else if constexpr (std::is_same_v<T, CaseExpr>) {
          json branches = json::array();
          for (const auto& br : x.branches) {
            branches.push_back(json{{"when", expr_json(br.when)}, {"then", expr_json(br.then)}});
          }
          return json{{"expr", "case"}, {"branches", branches},
                      {"else", expr_json(x.else_value)}};
        } else if constexpr (std::is_same_v<T, LikeExpr>) {
          return json{{"expr", "like"}, {"input", expr_json(x.input)}, {"pattern", x.pattern}};
        } else if constexpr (std::is_same_v<T, PredictExpr>) {
          json args = json::array();
          for (const auto& a : x.args) args.push_back(expr_json(a));
          return json{{"expr", "predict"}, {"model", x.model}, {"args", args}};
        } else {
          fail("unknown expression variant");
        }
      },
      e->node);
}

json plan_json_node(const PlanPtr& p) {
  if (!p) fail("null plan node");
  return std::visit(
      [&](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScanNode>) {
          json j{{"op", "scan"}, {"table", x.table}};
          if (x.columns) j["columns"] = *x.columns;
          return j;
        } else if constexpr (std::is_same_v<T, FilterNode>) {
          return json{{"op", "filter"},
                      {"input", plan_json_node(x.input)},
                      {"predicate", expr_json(x.predicate)}};
        } else if constexpr (std::is_same_v<T, ProjectNode>) {
          json cols = json::array();
          for (const auto& item : x.items) {
            cols.push_back(json{{"name", item.name}, {"expr", expr_json(item.expr)}});
          }
          return json{{"op", "project"}, {"input", plan_json_node(x.input)}, {"columns", cols}};
        } else if constexpr (std::is_same_v<T, JoinNode>) {
          return json{{"op", "join"},
                      {"kind", "inner"},
                      {"left", plan_json_node(x.left)},
                      {"right", plan_json_node(x.right)},
                      {"left_key", x.left_key},
                      {"right_key", x.right_key}};
        } else if constexpr (std::is_same_v<T, AggregateNode>) {
          json aggs = json::array();
          for (const auto& a : x.aggs) {
            aggs.push_back(json{{"name", a.name}, {"fn", agg_fn_name(a.fn)},
                                {"expr", expr_json(a.expr)}});
          }
          return json{{"op", "aggregate"},
                      {"input", plan_json_node(x.input)},
                      {"keys", x.keys},
                      {"aggs", aggs}};
        } else if constexpr (std::is_same_v<T, SortNode>) {
          json keys = json::array();
          for (const auto& k : x.keys) {
            keys.push_back(json{{"column", k.column}, {"asc", k.ascending}});
          }
          return json{{"op", "sort"}, {"input", plan_json_node(x.input)}, {"keys", keys}};
        } else if constexpr (std::is_same_v<T, LimitNode>) {
          return json{{"op", "limit"}, {"input", plan_json_node(x.input)}, {"count", x.count}};
        } else {
          fail("unknown plan variant");
        }
      },
      p->node);
}

const json& field(const json& j, const char* name, const char* ctx) {
  if (!j.contains(name)) fail(std::string(ctx) + ": missing field \"" + name + "\"");
  return j[name];
}

std::string str_field(const json& j, const char* name, const char* ctx) {
  const json& f = field(j, name, ctx);
  if (!f.is_string()) fail(std::string(ctx) + ": field \"" + name + "\" must be a string");
  return f.get<std::string>();
}

ExprPtr parse_expr(const json& j);

ArithOp parse_arith_op(const std::string& s) {
  if (s == "add") return ArithOp::ADD;
  if (s == "sub") return ArithOp::SUB;
  if (s == "mul") return ArithOp::MUL;
  if (s == "div") return ArithOp::DIV;
  fail("unknown arith op '" + s + "'");
}

CompareOp parse_compare_op(const std::string& s) {
  if (s == "eq") return CompareOp::EQ;
  if (s == "ne") return CompareOp::NE;
  if (s == "lt") return CompareOp::LT;
  if (s == "le") return CompareOp::LE;
  if (s == "gt") return CompareOp::GT;
  if (s == "ge") return CompareOp::GE;
  fail("unknown compare op '" + s + "'");
}

AggFn parse_agg_fn(const std::string& s) {
  if (s == "sum") return AggFn::Sum;
  if (s == "count") return AggFn::Count;
  if (s == "avg") return AggFn::Avg;
  if (s == "min") return AggFn::Min;
  if (s == "max") return AggFn::Max;
  fail("unknown aggregate fn '" + s + "'");
}

ExprPtr parse_literal(const json& j) {
  std::string type_name = str_field(j, "type", "lit");
  auto type = logical_type_from_name(type_name);
  if (!type) fail("lit: unknown type '" + type_name + "'");
  const json& v = field(j, "value", "lit");
  switch (*type) {
    case LogicalType::Bool:
      if (!v.is_boolean()) fail("lit: bool value expected");
      return lit_bool(v.get<bool>());
    case LogicalType::Int64:
      if (!v.is_number_integer()) fail("lit: integer value expected");
      return lit_i64(v.get<int64_t>());
    case LogicalType::Float64:
      if (!v.is_number()) fail("lit: numeric value expected");
      return lit_f64(v.get<double>());
    case LogicalType::Utf8:
      if (!v.is_string()) fail("lit: string value expected");
      return lit_str(v.get<std::string>());
    case LogicalType::Date: {
      if (!v.is_string()) fail("lit: date value must be an ISO string");
      std::string iso = v.get<std::string>();
      encode_date(iso);  // reject malformed dates at parse time
      return lit_date(std::move(iso));
    }
  }
  fail("lit: bad type");
}

ExprPtr parse_expr(const json& j) {
  if (!j.is_object()) fail("expression must be an object");
  std::string tag = str_field(j, "expr", "expression");
  if (tag == "col") return col(str_field(j, "name", "col"));
  if (tag == "lit") return parse_literal(j);
  if (tag == "arith") {
    return make_arith(parse_arith_op(str_field(j, "op", "arith")),
                      parse_expr(field(j, "left", "arith")),
                      parse_expr(field(j, "right", "arith")));
  }
  if (tag == "cmp") {
    return make_compare(parse_compare_op(str_field(j, "op", "cmp")),
                        parse_expr(field(j, "left", "cmp")),
                        parse_expr(field(j, "right", "cmp")));
  }
  if (tag == "logical") {
    std::string op = str_field(j, "op", "logical");
    if (op != "and" && op != "or") fail("unknown logical op '" + op + "'");
    return make_logical(op == "and" ? LogicalOp::AND : LogicalOp::OR,
                        parse_expr(field(j, "left", "logical")),
                        parse_expr(field(j, "right", "logical")));
  }
  if (tag == "not") return make_not(parse_expr(field(j, "input", "not")));
  if (tag == "between") {
    return make_between(parse_expr(field(j, "input", "between")),
                        parse_expr(field(j, "lo", "between")),
                        parse_expr(field(j, "hi", "between")));
  }
  if (tag == "case") {
    const json& branches = field(j, "branches", "case");
    if (!branches.is_array()) fail("case: \"branches\" must be an array");
    std::vector<CaseExpr::Branch> out;
    for (const auto& br : branches) {
      out.push_back({parse_expr(field(br, "when", "case branch")),
                     parse_expr(field(br, "then", "case branch"))});
    }
    return make_case(std::move(out), parse_expr(field(j, "else", "case")));
  }
  if (tag == "like") {
    return make_like(parse_expr(field(j, "input", "like")), str_field(j, "pattern", "like"));
  }
  if (tag == "predict") {
    const json& args = field(j, "args", "predict");
    if (!args.is_array()) fail("predict: \"args\" must be an array");
    std::vector<ExprPtr> out;
    for (const auto& a : args) out.push_back(parse_expr(a));
    return make_predict(str_field(j, "model", "predict"), std::move(out));
  }
  fail("unknown expression tag '" + tag + "'");
}

PlanPtr parse_plan(const json& j) {
  if (!j.is_object()) fail("plan node must be an object");
  std::string op = str_field(j, "op", "plan node");
  if (op == "scan") {
    std::optional<std::vector<std::string>> columns;
    if (j.contains("columns")) {
      if (!j["columns"].is_array()) fail("scan: \"columns\" must be an array");
      columns.emplace();
      for (const auto& c : j["columns"]) {
        if (!c.is_string()) fail("scan: column names must be strings");
        columns->push_back(c.get<std::string>());
      }
    }
    return make_scan(str_field(j, "table", "scan"), std::move(columns));
  }
  if (op == "filter") {
    return make_filter(parse_plan(field(j, "input", "filter")),
                       parse_expr(field(j, "predicate", "filter")));
  }
  if (op == "project") {
    const json& cols = field(j, "columns", "project");
    if (!cols.is_array()) fail("project: \"columns\" must be an array");
    std::vector<ProjectNode::Item> items;
    for (const auto& c : cols) {
      items.push_back({str_field(c, "name", "project column"),
                       parse_expr(field(c, "expr", "project column"))});
    }
    return make_project(parse_plan(field(j, "input", "project")), std::move(items));
  }
  if (op == "join") {
    std::string kind = j.contains("kind") ? str_field(j, "kind", "join") : "inner";
    if (kind != "inner") fail("join: unsupported kind '" + kind + "'");
    return make_join(parse_plan(field(j, "left", "join")), parse_plan(field(j, "right", "join")),
                     str_field(j, "left_key", "join"), str_field(j, "right_key", "join"));
  }
  if (op == "aggregate") {
    const json& keys = field(j, "keys", "aggregate");
    if (!keys.is_array()) fail("aggregate: \"keys\" must be an array");
    std::vector<std::string> key_names;
    for (const auto& k : keys) {
      if (!k.is_string()) fail("aggregate: keys must be strings");
      key_names.push_back(k.get<std::string>());
    }
    const json& aggs = field(j, "aggs", "aggregate");
    if (!aggs.is_array()) fail("aggregate: \"aggs\" must be an array");
    std::vector<AggregateNode::Agg> agg_list;
    for (const auto& a : aggs) {
      agg_list.push_back({str_field(a, "name", "aggregate"),
                          parse_agg_fn(str_field(a, "fn", "aggregate")),
                          parse_expr(field(a, "expr", "aggregate"))});
    }
    return make_aggregate(parse_plan(field(j, "input", "aggregate")), std::move(key_names),
                          std::move(agg_list));
  }
  if (op == "sort") {
    const json& keys = field(j, "keys", "sort");
    if (!keys.is_array()) fail("sort: \"keys\" must be an array");
    std::vector<SortNode::Key> out;
    for (const auto& k : keys) {
      bool asc = true;
      if (k.contains("asc")) {
        if (!k["asc"].is_boolean()) fail("sort: \"asc\" must be a bool");
        asc = k["asc"].get<bool>();
      }
      out.push_back({str_field(k, "column", "sort key"), asc});
    }
    return make_sort(parse_plan(field(j, "input", "sort")), std::move(out));
  }
  if (op == "limit") {
    const json& count = field(j, "count", "limit");
    if (!count.is_number_integer()) fail("limit: \"count\" must be an integer");
    return make_limit(parse_plan(field(j, "input", "limit")), count.get<int64_t>());
  }
  fail("unknown plan op '" + op + "'");
}

}  // namespace

std::string plan_to_json(const PlanPtr& plan, int indent) {
  return plan_json_node(plan).dump(indent);
}

PlanPtr plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  return parse_plan(j);
}

std::string expr_to_json(const ExprPtr& expr, int indent) { return expr_json(expr).dump(indent); }

ExprPtr expr_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  return parse_expr(j);
}

}  // namespace tensql

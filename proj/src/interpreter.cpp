#include "tensql/exec/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "tensql/strings.hpp"

namespace tensql {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ExecError(msg); }

// Dates travel as epoch-nanosecond int64 cells; Utf8 as std::string.
using Rows = std::vector<Row>;

struct Relation {
  Schema schema;
  Rows rows;
};

Cell normalize_key(Cell c) {
  if (auto* d = std::get_if<double>(&c)) {
    if (*d == 0.0) return 0.0;  // fold -0.0 and +0.0 into one group key
    if (std::isnan(*d)) fail("group/sort key is NaN");
  }
  return c;
}

class Interpreter {
 public:
  Interpreter(const Catalog& catalog, const TableSet& tables, InterpreterStats* stats)
      : catalog_(catalog), tables_(tables), stats_(stats) {}

  Relation eval(const PlanPtr& plan) {
    Relation r = std::visit([&](const auto& x) { return eval_node(x); }, plan->node);
    if (stats_) stats_->rows_out.push_back(static_cast<int64_t>(r.rows.size()));
    return r;
  }

 private:
  Relation eval_node(const ScanNode& scan) {
    const EncodedTable* t = nullptr;
    for (const auto& [name, table] : tables_) {
      if (iequals(name, scan.table)) t = &table;
    }
    if (!t) fail("no input table named '" + scan.table + "'");
    std::vector<const EncodedColumn*> cols;
    if (scan.columns) {
      for (const auto& name : *scan.columns) cols.push_back(&t->column(name));
    } else {
      for (const auto& c : t->columns()) cols.push_back(&c);
    }
    Relation out;
    for (const auto* c : cols) out.schema.push_back({c->name, c->logical});
    out.rows.assign(static_cast<size_t>(t->row_count()), Row{});
    for (auto& r : out.rows) r.reserve(cols.size());
    for (const auto* c : cols) {
      switch (c->logical) {
        case LogicalType::Int64:
        case LogicalType::Date: {
          auto v = c->tensor.data<int64_t>();
          for (size_t i = 0; i < out.rows.size(); ++i) out.rows[i].emplace_back(v[i]);
          break;
        }
        case LogicalType::Float64: {
          auto v = c->tensor.data<double>();
          for (size_t i = 0; i < out.rows.size(); ++i) out.rows[i].emplace_back(v[i]);
          break;
        }
        case LogicalType::Bool: {
          auto v = c->tensor.data<uint8_t>();
          for (size_t i = 0; i < out.rows.size(); ++i) out.rows[i].emplace_back(v[i] != 0);
          break;
        }
        case LogicalType::Utf8: {
          for (size_t i = 0; i < out.rows.size(); ++i) {
            out.rows[i].emplace_back(decode_string_row(c->tensor, static_cast<int64_t>(i)));
          }
          break;
        }
      }
    }
    return out;
  }

  Relation eval_node(const FilterNode& f) {
    Relation in = eval(f.input);
    Relation out{in.schema, {}};
    for (const auto& row : in.rows) {
      Cell v = eval_expr(f.predicate, in.schema, row);
      if (std::get<bool>(v)) out.rows.push_back(row);
    }
    return out;
  }

  Relation eval_node(const ProjectNode& p) {
    Relation in = eval(p.input);
    Relation out;
    out.schema = infer_schema(std::make_shared<const PlanNode>(PlanNode{p}), catalog_);
    for (const auto& row : in.rows) {
      Row r;
      for (const auto& item : p.items) r.push_back(eval_expr(item.expr, in.schema, row));
      out.rows.push_back(std::move(r));
    }
    return out;
  }

  Relation eval_node(const JoinNode& j) {
    Relation l = eval(j.left);
    Relation r = eval(j.right);
    int li = schema_index(l.schema, j.left_key);
    int ri = schema_index(r.schema, j.right_key);
    if (li < 0 || ri < 0) fail("join key not found");
    Relation out;
    out.schema = l.schema;
    for (const auto& c : r.schema) {
      std::string name = c.name;
      if (schema_find(l.schema, name)) name += "_r";
      out.schema.push_back({name, c.type});
    }
    auto check_nan = [&](const Rows& rows, int idx) {
      for (const auto& row : rows) {
        if (const auto* d = std::get_if<double>(&row[static_cast<size_t>(idx)])) {
          if (std::isnan(*d)) fail("join key is NaN");
        }
      }
    };
    check_nan(l.rows, li);
    check_nan(r.rows, ri);
    for (const auto& lrow : l.rows) {
      for (const auto& rrow : r.rows) {
        if (lrow[static_cast<size_t>(li)] == rrow[static_cast<size_t>(ri)]) {
          Row combined = lrow;
          combined.insert(combined.end(), rrow.begin(), rrow.end());
          out.rows.push_back(std::move(combined));
        }
      }
    }
    return out;
  }

  struct AggState {
    int64_t count = 0;
    double fsum = 0.0;
    int64_t isum = 0;
    std::optional<Cell> minmax;
  };

  Relation eval_node(const AggregateNode& a) {
    Relation in = eval(a.input);
    std::vector<int> key_idx;
    for (const auto& k : a.keys) {
      int i = schema_index(in.schema, k);
      if (i < 0) fail("group key not found");
      key_idx.push_back(i);
    }
    std::vector<LogicalType> agg_types;
    for (const auto& agg : a.aggs) {
      agg_types.push_back(infer_expr_type(agg.expr, in.schema, catalog_));
    }

    // std::map keeps groups in ascending key order, which matches the
    // sort-based tensor lowering's output order.
    std::map<Row, std::vector<AggState>> groups;
    for (const auto& row : in.rows) {
      Row key;
      for (int i : key_idx) key.push_back(normalize_key(row[static_cast<size_t>(i)]));
      auto [it, inserted] = groups.try_emplace(std::move(key));
      if (inserted) it->second.resize(a.aggs.size());
      for (size_t g = 0; g < a.aggs.size(); ++g) {
        Cell v = eval_expr(a.aggs[g].expr, in.schema, row);
        AggState& st = it->second[g];
        st.count += 1;
        switch (a.aggs[g].fn) {
          case AggFn::Count: break;
          case AggFn::Sum:
          case AggFn::Avg:
            if (agg_types[g] == LogicalType::Float64) {
              st.fsum += std::get<double>(v);
            } else {
              if (__builtin_add_overflow(st.isum, std::get<int64_t>(v), &st.isum)) {
                fail("sum overflow");
              }
            }
            break;
          case AggFn::Min:
          case AggFn::Max: {
            bool take = !st.minmax.has_value();
            if (!take) {
              take = a.aggs[g].fn == AggFn::Min ? v < *st.minmax : *st.minmax < v;
            }
            if (take) st.minmax = v;
            break;
          }
        }
      }
    }

    if (a.keys.empty() && groups.empty()) {
      // scalar aggregation over zero rows: SUM/COUNT are 0, the rest error
      groups.try_emplace(Row{}).first->second.resize(a.aggs.size());
      for (const auto& agg : a.aggs) {
        if (agg.fn == AggFn::Avg || agg.fn == AggFn::Min || agg.fn == AggFn::Max) {
          fail(std::string(agg_fn_name(agg.fn)) + " over zero rows");
        }
      }
    }

    Relation out;
    out.schema = infer_schema(std::make_shared<const PlanNode>(PlanNode{a}), catalog_);
    for (const auto& [key, states] : groups) {
      Row row = key;
      for (size_t g = 0; g < a.aggs.size(); ++g) {
        const AggState& st = states[g];
        switch (a.aggs[g].fn) {
          case AggFn::Count: row.emplace_back(st.count); break;
          case AggFn::Sum:
            if (agg_types[g] == LogicalType::Float64) {
              row.emplace_back(st.fsum);
            } else {
              row.emplace_back(st.isum);
            }
            break;
          case AggFn::Avg: {
            double total =
                agg_types[g] == LogicalType::Float64 ? st.fsum : static_cast<double>(st.isum);
            if (st.count == 0) fail("avg over zero rows");
            row.emplace_back(total / static_cast<double>(st.count));
            break;
          }
          case AggFn::Min:
          case AggFn::Max:
            if (!st.minmax) fail(std::string(agg_fn_name(a.aggs[g].fn)) + " over zero rows");
            row.push_back(*st.minmax);
            break;
        }
      }
      out.rows.push_back(std::move(row));
    }
    return out;
  }

  Relation eval_node(const SortNode& s) {
    Relation in = eval(s.input);
    std::vector<std::pair<int, bool>> keys;
    for (const auto& k : s.keys) {
      int i = schema_index(in.schema, k.column);
      if (i < 0) fail("sort key not found");
      keys.emplace_back(i, k.ascending);
      if (in.schema[static_cast<size_t>(i)].type == LogicalType::Float64) {
        for (const auto& row : in.rows) {
          if (std::isnan(std::get<double>(row[static_cast<size_t>(i)]))) {
            fail("sort key is NaN");
          }
        }
      }
    }
    std::stable_sort(in.rows.begin(), in.rows.end(), [&](const Row& a, const Row& b) {
      for (auto [i, asc] : keys) {
        const Cell& x = a[static_cast<size_t>(i)];
        const Cell& y = b[static_cast<size_t>(i)];
        if (x < y) return asc;
        if (y < x) return !asc;
      }
      return false;
    });
    return in;
  }

  Relation eval_node(const LimitNode& l) {
    Relation in = eval(l.input);
    if (static_cast<int64_t>(in.rows.size()) > l.count) {
      in.rows.resize(static_cast<size_t>(l.count));
    }
    return in;
  }

  Cell eval_expr(const ExprPtr& e, const Schema& schema, const Row& row) {
    return std::visit(
        [&](const auto& x) -> Cell {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ColRef>) {
            int i = schema_index(schema, x.name);
            if (i < 0) fail("unresolved column '" + x.name + "'");
            return row[static_cast<size_t>(i)];
          } else if constexpr (std::is_same_v<T, Literal>) {
            switch (x.type) {
              case LogicalType::Bool: return std::get<bool>(x.value);
              case LogicalType::Int64: return std::get<int64_t>(x.value);
              case LogicalType::Float64: return std::get<double>(x.value);
              case LogicalType::Utf8: return std::get<std::string>(x.value);
              case LogicalType::Date: return date_literal_ns(x);
            }
            fail("bad literal");
          } else if constexpr (std::is_same_v<T, ArithExpr>) {
            Cell l = eval_expr(x.left, schema, row);
            Cell r = eval_expr(x.right, schema, row);
            if (std::holds_alternative<double>(l)) {
              double a = std::get<double>(l), b = std::get<double>(r);
              switch (x.op) {
                case ArithOp::ADD: return a + b;
                case ArithOp::SUB: return a - b;
                case ArithOp::MUL: return a * b;
                case ArithOp::DIV:
                  if (b == 0.0) fail("division by zero");
                  return a / b;
              }
            }
            int64_t a = std::get<int64_t>(l), b = std::get<int64_t>(r), out = 0;
            bool ovf = false;
            switch (x.op) {
              case ArithOp::ADD: ovf = __builtin_add_overflow(a, b, &out); break;
              case ArithOp::SUB: ovf = __builtin_sub_overflow(a, b, &out); break;
              case ArithOp::MUL: ovf = __builtin_mul_overflow(a, b, &out); break;
              case ArithOp::DIV: fail("integer division unsupported");
            }
            if (ovf) fail("integer overflow");
            return out;
          } else if constexpr (std::is_same_v<T, CompareExpr>) {
            Cell l = eval_expr(x.left, schema, row);
            Cell r = eval_expr(x.right, schema, row);
            switch (x.op) {
              case CompareOp::EQ: return l == r;
              case CompareOp::NE: return l != r;
              case CompareOp::LT: return l < r;
              case CompareOp::LE: return l <= r;
              case CompareOp::GT: return l > r;
              case CompareOp::GE: return l >= r;
            }
            fail("bad compare");
          } else if constexpr (std::is_same_v<T, LogicalExpr>) {
            // evaluate both sides; no short-circuiting
            bool l = std::get<bool>(eval_expr(x.left, schema, row));
            bool r = std::get<bool>(eval_expr(x.right, schema, row));
            return x.op == LogicalOp::AND ? (l && r) : (l || r);
          } else if constexpr (std::is_same_v<T, NotExpr>) {
            return !std::get<bool>(eval_expr(x.input, schema, row));
          } else if constexpr (std::is_same_v<T, BetweenExpr>) {
            Cell v = eval_expr(x.input, schema, row);
            Cell lo = eval_expr(x.lo, schema, row);
            Cell hi = eval_expr(x.hi, schema, row);
            return !(v < lo) && !(hi < v);
          } else if constexpr (std::is_same_v<T, CaseExpr>) {
            // every branch is evaluated, matching the tensor lowering
            std::optional<Cell> chosen;
            for (const auto& br : x.branches) {
              bool cond = std::get<bool>(eval_expr(br.when, schema, row));
              Cell val = eval_expr(br.then, schema, row);
              if (cond && !chosen) chosen = val;
            }
            Cell else_val = eval_expr(x.else_value, schema, row);
            return chosen ? *chosen : else_val;
          } else if constexpr (std::is_same_v<T, LikeExpr>) {
            std::string v = std::get<std::string>(eval_expr(x.input, schema, row));
            LikeShape shape = parse_like_pattern(x.pattern);
            switch (shape.anchor) {
              case MatchAnchor::START: return v.rfind(shape.literal, 0) == 0;
              case MatchAnchor::END:
                return v.size() >= shape.literal.size() &&
                       v.compare(v.size() - shape.literal.size(), shape.literal.size(),
                                 shape.literal) == 0;
              case MatchAnchor::ANY: return v.find(shape.literal) != std::string::npos;
              case MatchAnchor::EXACT: return v == shape.literal;
            }
            fail("bad like");
          } else if constexpr (std::is_same_v<T, PredictExpr>) {
            const ModelSpec* model = catalog_.find_model(x.model);
            if (!model) fail("unknown model '" + x.model + "'");
            std::vector<double> features;
            for (const auto& a : x.args) {
              features.push_back(std::get<double>(eval_expr(a, schema, row)));
            }
            return predict_scalar(*model, features);
          } else {
            fail("unknown expression");
          }
        },
        e->node);
  }

  const Catalog& catalog_;
  const TableSet& tables_;
  InterpreterStats* stats_;
};

EncodedTable relation_to_table(const Relation& rel) {
  std::vector<EncodedColumn> cols;
  for (size_t c = 0; c < rel.schema.size(); ++c) {
    const auto& spec = rel.schema[c];
    switch (spec.type) {
      case LogicalType::Int64:
      case LogicalType::Date: {
        std::vector<int64_t> v;
        for (const auto& row : rel.rows) v.push_back(std::get<int64_t>(row[c]));
        cols.push_back({spec.name, spec.type, Tensor::from_vector(std::move(v))});
        break;
      }
      case LogicalType::Float64: {
        std::vector<double> v;
        for (const auto& row : rel.rows) v.push_back(std::get<double>(row[c]));
        cols.push_back({spec.name, spec.type, Tensor::from_vector(std::move(v))});
        break;
      }
      case LogicalType::Bool: {
        std::vector<uint8_t> v;
        for (const auto& row : rel.rows) v.push_back(std::get<bool>(row[c]) ? 1 : 0);
        cols.push_back({spec.name, spec.type, Tensor::from_vector(std::move(v))});
        break;
      }
      case LogicalType::Utf8: {
        std::vector<std::string> v;
        for (const auto& row : rel.rows) v.push_back(std::get<std::string>(row[c]));
        cols.push_back({spec.name, spec.type, encode_string_rows(v)});
        break;
      }
    }
  }
  return EncodedTable(std::move(cols));
}

}  // namespace

EncodedTable reference_interpreter(const PlanPtr& plan, const Catalog& catalog,
                                   const TableSet& tables, InterpreterStats* stats) {
  Interpreter interp(catalog, tables, stats);
  return relation_to_table(interp.eval(plan));
}

}  // namespace tensql

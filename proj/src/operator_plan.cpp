#include "tensql/exec/operator_plan.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "tensql/strings.hpp"

namespace tensql {

const char* instr_op_name(InstrOp op) {
  switch (op) {
    case InstrOp::Compare: return "compare";
    case InstrOp::Arith: return "arith";
    case InstrOp::Logical: return "logical";
    case InstrOp::Not: return "not";
    case InstrOp::SelectWhere: return "select_where";
    case InstrOp::PrefixSum: return "prefix_sum_exclusive";
    case InstrOp::Compact: return "compact";
    case InstrOp::ArgsortStable: return "argsort_stable";
    case InstrOp::Gather: return "gather";
    case InstrOp::SearchSorted: return "searchsorted";
    case InstrOp::ExpandSegments: return "expand_segments";
    case InstrOp::SegmentStarts: return "segment_starts";
    case InstrOp::SegmentedReduce: return "segmented_reduce";
    case InstrOp::MatMul: return "matmul";
    case InstrOp::SubstringMatch: return "substring_match";
    case InstrOp::LoadColumn: return "load_column";
    case InstrOp::ConstTensor: return "const";
    case InstrOp::IotaRows: return "iota_rows";
    case InstrOp::IotaLen: return "iota_len";
    case InstrOp::Cast: return "cast";
    case InstrOp::ExpF64: return "exp";
    case InstrOp::LastOrZero: return "last_or_zero";
    case InstrOp::PackCols: return "pack_cols";
    case InstrOp::BroadcastScalar: return "broadcast_scalar";
    case InstrOp::PadWidthLike: return "pad_width_like";
    case InstrOp::SortPermRows: return "sort_perm_rows";
    case InstrOp::StringCompare: return "string_compare";
  }
  return "?";
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw PlanError("lowering: " + msg); }

struct BoundColumn {
  std::string name;
  LogicalType type;
  int slot;
};

struct BoundRelation {
  std::vector<BoundColumn> cols;

  int rep_slot() const { return cols.at(0).slot; }

  const BoundColumn* find(std::string_view name) const {
    for (const auto& c : cols) {
      if (iequals(c.name, name)) return &c;
    }
    return nullptr;
  }
};

struct ValueRef {
  int slot;
  LogicalType type;
  bool scalar;  // no column reference anywhere in the producing subtree
};

class Lowering {
 public:
  explicit Lowering(const Catalog& catalog) : catalog_(catalog) {}

  OperatorPlan run(const PlanPtr& plan) {
    Schema root_schema = infer_schema(plan, catalog_);
    BoundRelation bound = lower(plan);
    if (bound.cols.size() != root_schema.size()) fail("output arity mismatch");
    for (size_t i = 0; i < root_schema.size(); ++i) {
      plan_.outputs.push_back({root_schema[i].name, root_schema[i].type, bound.cols[i].slot});
    }
    plan_.num_slots = next_slot_;
    return std::move(plan_);
  }

 private:
  OperatorStep& step() { return plan_.steps.back(); }

  void begin_step(const char* kind) {
    int n = kind_counter_[kind]++;
    plan_.steps.push_back({std::string(kind) + "#" + std::to_string(n), kind, {}});
  }

  int emit(Instr instr) {
    instr.output = next_slot_++;
    step().instrs.push_back(std::move(instr));
    return step().instrs.back().output;
  }

  int emit_const(Tensor t) {
    Instr in{InstrOp::ConstTensor, {}};
    in.constant = std::move(t);
    return emit(std::move(in));
  }

  int const_i64(int64_t v) { return emit_const(Tensor::scalar<int64_t>(v)); }
  int const_f64(double v) { return emit_const(Tensor::scalar<double>(v)); }

  int kernel2(InstrOp op, int a, int b) { return emit(Instr{op, {a, b}}); }

  int compare_instr(int a, int b, CompareOp cmp) {
    Instr in{InstrOp::Compare, {a, b}};
    in.cmp = cmp;
    return emit(std::move(in));
  }

  int string_compare_instr(int a, int b, CompareOp cmp) {
    Instr in{InstrOp::StringCompare, {a, b}};
    in.cmp = cmp;
    return emit(std::move(in));
  }

  int arith_instr(int a, int b, ArithOp op) {
    Instr in{InstrOp::Arith, {a, b}};
    in.arith = op;
    return emit(std::move(in));
  }

  int logical_instr(int a, int b, LogicalOp op) {
    Instr in{InstrOp::Logical, {a, b}};
    in.logic = op;
    return emit(std::move(in));
  }

  int not_instr(int a) { return emit(Instr{InstrOp::Not, {a}}); }

  int gather_instr(int values, int idx) { return emit(Instr{InstrOp::Gather, {values, idx}}); }

  int iota_rows(int like, int64_t cap = -1) {
    Instr in{InstrOp::IotaRows, {like}};
    in.param = cap;
    return emit(std::move(in));
  }

  int cast_instr(int a, DType to) {
    Instr in{InstrOp::Cast, {a}};
    in.cast_to = to;
    return emit(std::move(in));
  }

  int broadcast(int value, int like) {
    return emit(Instr{InstrOp::BroadcastScalar, {value, like}});
  }

  int segmented_reduce_instr(int values, int ids, ReduceOp op, int64_t static_num,
                             int num_slot = -1) {
    Instr in{InstrOp::SegmentedReduce, num_slot >= 0 ? std::vector<int>{values, ids, num_slot}
                                                     : std::vector<int>{values, ids}};
    in.reduce = op;
    in.param = static_num;  // -1 means "read from the third input slot"
    return emit(std::move(in));
  }

  int materialize(const ValueRef& v, int rep_slot) {
    if (!v.scalar) return v.slot;
    return broadcast(v.slot, rep_slot);
  }

  BoundRelation finish(BoundRelation out) {
    for (const auto& c : out.cols) step().output_slots.push_back(c.slot);
    return out;
  }

  // ---- relational nodes ----------------------------------------------

  BoundRelation lower(const PlanPtr& plan) {
    return std::visit(
        [&](const auto& x) -> BoundRelation {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ScanNode>) {
            return lower_scan(x);
          } else if constexpr (std::is_same_v<T, JoinNode>) {
            return lower_join(x);
          } else if constexpr (std::is_same_v<T, FilterNode>) {
            BoundRelation in = lower(x.input);
            return lower_filter(x, in);
          } else if constexpr (std::is_same_v<T, ProjectNode>) {
            BoundRelation in = lower(x.input);
            return lower_project(x, in);
          } else if constexpr (std::is_same_v<T, AggregateNode>) {
            BoundRelation in = lower(x.input);
            return lower_aggregate(x, in);
          } else if constexpr (std::is_same_v<T, SortNode>) {
            BoundRelation in = lower(x.input);
            return lower_sort(x, in);
          } else if constexpr (std::is_same_v<T, LimitNode>) {
            BoundRelation in = lower(x.input);
            return lower_limit(x, in);
          } else {
            fail("unknown node");
          }
        },
        plan->node);
  }

  BoundRelation lower_scan(const ScanNode& scan) {
    const TableSchema* schema = catalog_.find_table(scan.table);
    if (!schema) fail("unknown table '" + scan.table + "'");
    bool recorded = false;
    for (const auto& [name, s] : plan_.input_tables) recorded |= iequals(name, scan.table);
    if (!recorded) plan_.input_tables.emplace_back(scan.table, *schema);

    begin_step("scan");
    BoundRelation out;
    Schema cols = infer_schema(make_scan(scan.table, scan.columns), catalog_);
    for (const auto& c : cols) {
      Instr in{InstrOp::LoadColumn, {}};
      in.table = scan.table;
      in.column = c.name;
      out.cols.push_back({c.name, c.type, emit(std::move(in))});
    }
    return finish(std::move(out));
  }

  BoundRelation lower_filter(const FilterNode& f, const BoundRelation& in) {
    begin_step("filter");
    ValueRef mask = lower_expr(f.predicate, in);
    int mask_slot = materialize(mask, in.rep_slot());
    int idx = kernel2(InstrOp::Compact, iota_rows(in.rep_slot()), mask_slot);
    BoundRelation out;
    for (const auto& c : in.cols) {
      out.cols.push_back({c.name, c.type, gather_instr(c.slot, idx)});
    }
    return finish(std::move(out));
  }

  BoundRelation lower_project(const ProjectNode& p, const BoundRelation& in) {
    begin_step("project");
    BoundRelation out;
    for (const auto& item : p.items) {
      ValueRef v = lower_expr(item.expr, in);
      out.cols.push_back({item.name, v.type, materialize(v, in.rep_slot())});
    }
    return finish(std::move(out));
  }

  BoundRelation lower_join(const JoinNode& j) {
    BoundRelation left = lower(j.left);
    BoundRelation right = lower(j.right);
    begin_step("join");

    const BoundColumn* lk = left.find(j.left_key);
    const BoundColumn* rk = right.find(j.right_key);
    if (!lk || !rk) fail("join key not bound");

    // sort the build (right) side only
    int perm = emit(Instr{InstrOp::ArgsortStable, {rk->slot}});
    int sorted_key = gather_instr(rk->slot, perm);
    Instr lo_in{InstrOp::SearchSorted, {sorted_key, lk->slot}};
    lo_in.side = SearchSide::LEFT;
    int lo = emit(std::move(lo_in));
    Instr hi_in{InstrOp::SearchSorted, {sorted_key, lk->slot}};
    hi_in.side = SearchSide::RIGHT;
    int hi = emit(std::move(hi_in));
    int counts = arith_instr(hi, lo, ArithOp::SUB);

    // output positions and total match count
    int prefix = emit(Instr{InstrOp::PrefixSum, {counts}});
    int zero_ids = arith_instr(counts, const_i64(0), ArithOp::MUL);
    int total = segmented_reduce_instr(counts, zero_ids, ReduceOp::SUM, 1);
    int out_iota = emit(Instr{InstrOp::IotaLen, {total}});

    // left row of each output position: how many runs start at or before it
    Instr pos_in{InstrOp::SearchSorted, {prefix, out_iota}};
    pos_in.side = SearchSide::RIGHT;
    int left_ids = arith_instr(emit(std::move(pos_in)), const_i64(1), ArithOp::SUB);

    // right rows in sorted order, mapped back through the permutation
    int right_sorted_ids = kernel2(InstrOp::ExpandSegments, lo, counts);
    int right_ids = gather_instr(perm, right_sorted_ids);

    BoundRelation out;
    for (const auto& c : left.cols) {
      out.cols.push_back({c.name, c.type, gather_instr(c.slot, left_ids)});
    }
    for (const auto& c : right.cols) {
      std::string name = c.name;
      if (left.find(name)) name += "_r";
      out.cols.push_back({name, c.type, gather_instr(c.slot, right_ids)});
    }
    return finish(std::move(out));
  }

  // stable multi-key permutation; keys processed last to first so the first
  // key dominates
  int sort_perm(const BoundRelation& in,
                const std::vector<std::pair<const BoundColumn*, bool>>& keys) {
    int perm = iota_rows(in.rep_slot());
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
      Instr pass{InstrOp::SortPermRows, {it->first->slot, perm}};
      pass.param = it->second ? 1 : 0;
      perm = emit(std::move(pass));
    }
    return perm;
  }

  BoundRelation lower_aggregate(const AggregateNode& a, const BoundRelation& in) {
    begin_step("aggregate");

    BoundRelation sorted = in;
    int ids;
    int nseg_slot = -1;
    int64_t nseg_static = -1;
    int starts = -1;

    if (a.keys.empty()) {
      // one segment covering every row
      ids = arith_instr(iota_rows(in.rep_slot()), const_i64(0), ArithOp::MUL);
      nseg_static = 1;
    } else {
      std::vector<std::pair<const BoundColumn*, bool>> keys;
      for (const auto& k : a.keys) {
        const BoundColumn* c = in.find(k);
        if (!c) fail("group key not bound");
        keys.emplace_back(c, true);
      }
      int perm = sort_perm(in, keys);
      sorted.cols.clear();
      for (const auto& c : in.cols) {
        sorted.cols.push_back({c.name, c.type, gather_instr(c.slot, perm)});
      }
      // a combined group starts where any key changes
      for (const auto& k : a.keys) {
        int s = emit(Instr{InstrOp::SegmentStarts, {sorted.find(k)->slot}});
        starts = starts < 0 ? s : logical_instr(starts, s, LogicalOp::OR);
      }
      int st_i = cast_instr(starts, DType::Int64);
      int incl = arith_instr(emit(Instr{InstrOp::PrefixSum, {st_i}}), st_i, ArithOp::ADD);
      ids = arith_instr(incl, const_i64(1), ArithOp::SUB);
      nseg_slot = emit(Instr{InstrOp::LastOrZero, {incl}});
    }

    BoundRelation out;
    if (!a.keys.empty()) {
      // first row of each segment carries the key values
      int first_idx = kernel2(InstrOp::Compact, iota_rows(sorted.rep_slot()), starts);
      for (const auto& k : a.keys) {
        const BoundColumn* c = sorted.find(k);
        out.cols.push_back({c->name, c->type, gather_instr(c->slot, first_idx)});
      }
    }

    for (const auto& agg : a.aggs) {
      ValueRef v = lower_expr(agg.expr, sorted);
      int val = materialize(v, sorted.rep_slot());
      int slot;
      LogicalType out_type = v.type;
      switch (agg.fn) {
        case AggFn::Sum:
        case AggFn::Min:
        case AggFn::Max: {
          ReduceOp op = agg.fn == AggFn::Sum   ? ReduceOp::SUM
                        : agg.fn == AggFn::Min ? ReduceOp::MIN
                                               : ReduceOp::MAX;
          slot = segmented_reduce_instr(val, ids, op, nseg_static, nseg_slot);
          break;
        }
        case AggFn::Count: {
          slot = segmented_reduce_instr(ids, ids, ReduceOp::COUNT, nseg_static, nseg_slot);
          out_type = LogicalType::Int64;
          break;
        }
        case AggFn::Avg: {
          int sum = segmented_reduce_instr(val, ids, ReduceOp::SUM, nseg_static, nseg_slot);
          if (v.type == LogicalType::Int64) sum = cast_instr(sum, DType::Float64);
          int cnt = segmented_reduce_instr(ids, ids, ReduceOp::COUNT, nseg_static, nseg_slot);
          slot = arith_instr(sum, cast_instr(cnt, DType::Float64), ArithOp::DIV);
          out_type = LogicalType::Float64;
          break;
        }
        default: fail("bad aggregate");
      }
      out.cols.push_back({agg.name, out_type, slot});
    }
    return finish(std::move(out));
  }

  BoundRelation lower_sort(const SortNode& s, const BoundRelation& in) {
    begin_step("sort");
    std::vector<std::pair<const BoundColumn*, bool>> keys;
    for (const auto& k : s.keys) {
      const BoundColumn* c = in.find(k.column);
      if (!c) fail("sort key not bound");
      keys.emplace_back(c, k.ascending);
    }
    int perm = sort_perm(in, keys);
    BoundRelation out;
    for (const auto& c : in.cols) {
      out.cols.push_back({c.name, c.type, gather_instr(c.slot, perm)});
    }
    return finish(std::move(out));
  }

  BoundRelation lower_limit(const LimitNode& l, const BoundRelation& in) {
    begin_step("limit");
    int idx = iota_rows(in.rep_slot(), l.count);
    BoundRelation out;
    for (const auto& c : in.cols) {
      out.cols.push_back({c.name, c.type, gather_instr(c.slot, idx)});
    }
    return finish(std::move(out));
  }

  // ---- expressions -----------------------------------------------------

  ValueRef lower_expr(const ExprPtr& e, const BoundRelation& in) {
    return std::visit(
        [&](const auto& x) -> ValueRef {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ColRef>) {
            const BoundColumn* c = in.find(x.name);
            if (!c) fail("unresolved column '" + x.name + "'");
            return {c->slot, c->type, false};
          } else if constexpr (std::is_same_v<T, Literal>) {
            return lower_literal(x);
          } else if constexpr (std::is_same_v<T, ArithExpr>) {
            ValueRef l = lower_expr(x.left, in);
            ValueRef r = lower_expr(x.right, in);
            return {arith_instr(l.slot, r.slot, x.op), l.type, l.scalar && r.scalar};
          } else if constexpr (std::is_same_v<T, CompareExpr>) {
            ValueRef l = lower_expr(x.left, in);
            ValueRef r = lower_expr(x.right, in);
            int slot = l.type == LogicalType::Utf8 ? string_compare_instr(l.slot, r.slot, x.op)
                                                   : compare_instr(l.slot, r.slot, x.op);
            return {slot, LogicalType::Bool, l.scalar && r.scalar};
          } else if constexpr (std::is_same_v<T, LogicalExpr>) {
            ValueRef l = lower_expr(x.left, in);
            ValueRef r = lower_expr(x.right, in);
            return {logical_instr(l.slot, r.slot, x.op), LogicalType::Bool,
                    l.scalar && r.scalar};
          } else if constexpr (std::is_same_v<T, NotExpr>) {
            ValueRef v = lower_expr(x.input, in);
            return {not_instr(v.slot), LogicalType::Bool, v.scalar};
          } else if constexpr (std::is_same_v<T, BetweenExpr>) {
            // two compares and an AND
            ValueRef v = lower_expr(x.input, in);
            ValueRef lo = lower_expr(x.lo, in);
            ValueRef hi = lower_expr(x.hi, in);
            bool utf8 = v.type == LogicalType::Utf8;
            int ge = utf8 ? string_compare_instr(v.slot, lo.slot, CompareOp::GE)
                          : compare_instr(v.slot, lo.slot, CompareOp::GE);
            int le = utf8 ? string_compare_instr(v.slot, hi.slot, CompareOp::LE)
                          : compare_instr(v.slot, hi.slot, CompareOp::LE);
            return {logical_instr(ge, le, LogicalOp::AND), LogicalType::Bool,
                    v.scalar && lo.scalar && hi.scalar};
          } else if constexpr (std::is_same_v<T, CaseExpr>) {
            return lower_case(x, in);
          } else if constexpr (std::is_same_v<T, LikeExpr>) {
            ValueRef v = lower_expr(x.input, in);
            LikeShape shape = parse_like_pattern(x.pattern);
            Instr instr{InstrOp::SubstringMatch, {v.slot}};
            instr.anchor = shape.anchor;
            instr.pattern = shape.literal;
            return {emit(std::move(instr)), LogicalType::Bool, v.scalar};
          } else if constexpr (std::is_same_v<T, PredictExpr>) {
            return lower_predict(x, in);
          } else {
            fail("unknown expression");
          }
        },
        e->node);
  }

  ValueRef lower_literal(const Literal& lit) {
    switch (lit.type) {
      case LogicalType::Bool:
        return {emit_const(Tensor::scalar_bool(std::get<bool>(lit.value))), lit.type, true};
      case LogicalType::Int64:
        return {const_i64(std::get<int64_t>(lit.value)), lit.type, true};
      case LogicalType::Float64:
        return {const_f64(std::get<double>(lit.value)), lit.type, true};
      case LogicalType::Date: return {const_i64(date_literal_ns(lit)), lit.type, true};
      case LogicalType::Utf8:
        return {emit_const(encode_string_rows({std::get<std::string>(lit.value)})), lit.type,
                true};
    }
    fail("bad literal");
  }

  ValueRef lower_case(const CaseExpr& c, const BoundRelation& in) {
    std::vector<ValueRef> whens, thens;
    bool scalar = true;
    for (const auto& br : c.branches) {
      whens.push_back(lower_expr(br.when, in));
      thens.push_back(lower_expr(br.then, in));
      scalar = scalar && whens.back().scalar && thens.back().scalar;
    }
    ValueRef acc = lower_expr(c.else_value, in);
    scalar = scalar && acc.scalar;
    bool utf8 = acc.type == LogicalType::Utf8;

    // nested select_where from the last branch backwards
    int acc_slot = acc.slot;
    for (size_t i = whens.size(); i-- > 0;) {
      int cond = whens[i].slot;
      if (whens[i].scalar && !scalar) cond = broadcast(cond, in.rep_slot());
      int then_slot = thens[i].slot;
      if (utf8) {
        // zero-extend both values to the wider width before selecting
        int padded_then = emit(Instr{InstrOp::PadWidthLike, {then_slot, acc_slot}});
        acc_slot = emit(Instr{InstrOp::PadWidthLike, {acc_slot, then_slot}});
        then_slot = padded_then;
      }
      acc_slot = emit(Instr{InstrOp::SelectWhere, {cond, then_slot, acc_slot}});
    }
    return {acc_slot, acc.type, scalar};
  }

  ValueRef lower_predict(const PredictExpr& p, const BoundRelation& in) {
    const ModelSpec* spec = catalog_.find_model(p.model);
    if (!spec) fail("unknown model '" + p.model + "'");
    TensorizedModel model = tensorize(*spec);

    std::vector<ValueRef> args;
    bool scalar = true;
    for (const auto& a : p.args) {
      args.push_back(lower_expr(a, in));
      scalar = scalar && args.back().scalar;
    }

    if (model.kind == ModelKind::DecisionTree && model.constant_tree) {
      int c = const_f64(model.constant_value);
      if (!scalar) c = broadcast(c, in.rep_slot());
      return {c, LogicalType::Float64, scalar};
    }

    // assemble X (n,F); scalar args broadcast to the relation's row count
    // unless the whole call is constant
    std::vector<int> xcols;
    for (const auto& a : args) {
      xcols.push_back(scalar ? a.slot : materialize(a, in.rep_slot()));
    }
    int x = emit(Instr{InstrOp::PackCols, std::move(xcols)});

    if (model.kind != ModelKind::DecisionTree) {
      int xw = kernel2(InstrOp::MatMul, x, emit_const(model.weights));
      int z = arith_instr(xw, const_f64(model.bias), ArithOp::ADD);
      if (model.kind == ModelKind::Logistic) {
        // sigmoid from elementwise pieces: 1 / (1 + exp(-z))
        int neg = arith_instr(z, const_f64(-1.0), ArithOp::MUL);
        int den = arith_instr(emit(Instr{InstrOp::ExpF64, {neg}}), const_f64(1.0), ArithOp::ADD);
        z = arith_instr(const_f64(1.0), den, ArithOp::DIV);
      }
      return {z, LogicalType::Float64, scalar};
    }

    // GEMM tree: decisions S = [X.A < B], paths P = S.C; the chosen leaf is
    // the unique column where P matches the leaf's left-edge count D
    int xa = kernel2(InstrOp::MatMul, x, emit_const(model.feature_selector));
    int s = cast_instr(compare_instr(xa, emit_const(model.thresholds), CompareOp::LT),
                       DType::Float64);
    int paths = kernel2(InstrOp::MatMul, s, emit_const(model.path_matrix));
    int hit = compare_instr(paths, emit_const(model.left_counts), CompareOp::EQ);
    int hit_f = cast_instr(hit, DType::Float64);
    int64_t leaves = model.leaf_values.rows();
    std::vector<double> leaf_index(static_cast<size_t>(leaves));
    for (int64_t i = 0; i < leaves; ++i) {
      leaf_index[static_cast<size_t>(i)] = static_cast<double>(i);
    }
    int idx_f = kernel2(InstrOp::MatMul, hit_f,
                        emit_const(Tensor::from_matrix(leaves, 1, std::move(leaf_index))));
    int idx = cast_instr(idx_f, DType::Int64);
    int out = gather_instr(emit_const(model.leaf_values), idx);
    return {out, LogicalType::Float64, scalar};
  }

  const Catalog& catalog_;
  OperatorPlan plan_;
  int next_slot_ = 0;
  std::map<std::string, int> kind_counter_;
};

}  // namespace

OperatorPlan plan_operators(const PlanPtr& plan, const Catalog& catalog) {
  return Lowering(catalog).run(plan);
}

std::string operator_plan_to_dot(const OperatorPlan& plan) {
  std::ostringstream os;
  os << "digraph tensor_program {\n  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n";
  for (size_t s = 0; s < plan.steps.size(); ++s) {
    const auto& step = plan.steps[s];
    os << "  subgraph cluster_" << s << " {\n    label=\"" << step.id << "\";\n";
    for (const auto& in : step.instrs) {
      std::string label = instr_op_name(in.op);
      switch (in.op) {
        case InstrOp::LoadColumn: label += " " + in.table + "." + in.column; break;
        case InstrOp::Compare:
        case InstrOp::StringCompare: label += std::string(" ") + compare_op_name(in.cmp); break;
        case InstrOp::Arith: label += std::string(" ") + arith_op_name(in.arith); break;
        case InstrOp::Logical: label += std::string(" ") + logical_op_name(in.logic); break;
        case InstrOp::SegmentedReduce:
          label += std::string(" ") + reduce_op_name(in.reduce);
          break;
        case InstrOp::SearchSorted:
          label += in.side == SearchSide::LEFT ? " left" : " right";
          break;
        case InstrOp::SubstringMatch:
          label += std::string(" ") + match_anchor_name(in.anchor) + " '" + in.pattern + "'";
          break;
        case InstrOp::SortPermRows: label += in.param == 1 ? " asc" : " desc"; break;
        default: break;
      }
      os << "    s" << in.output << " [label=\"" << label << "\"];\n";
    }
    os << "  }\n";
  }
  for (const auto& step : plan.steps) {
    for (const auto& in : step.instrs) {
      for (int src : in.inputs) {
        os << "  s" << src << " -> s" << in.output << ";\n";
      }
    }
  }
  os << "  result [shape=oval];\n";
  for (const auto& out : plan.outputs) {
    os << "  s" << out.slot << " -> result [label=\"" << out.name << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace tensql

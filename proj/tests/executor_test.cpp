#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/fixtures.hpp"
#include "support/table_compare.hpp"
#include "support/test_util.hpp"
#include "tensql/exec/executor.hpp"
#include "tensql/sql.hpp"

using namespace tensql;
using namespace tensql::testing;

namespace {

EncodedTable run_plan(const PlanPtr& plan, const Catalog& catalog, const TableSet& tables,
                      const KernelBackend& backend = reference_backend()) {
  Executor ex(plan_operators(plan, catalog), backend);
  return ex.execute(tables);
}

TableSet q6_tables() {
  return {{"lineitem", encode_table(lineitem_schema(), q6_fixture_rows())}};
}

int count_instrs(const OperatorPlan& p, InstrOp op) {
  int n = 0;
  for (const auto& s : p.steps) {
    for (const auto& i : s.instrs) n += i.op == op ? 1 : 0;
  }
  return n;
}

}  // namespace

TEST_CASE("Q6 fixture: revenue matches the row oracle") {
  Catalog catalog = tpch_catalog();
  PlanPtr plan = sql::parse_and_plan(q6_sql(), catalog);
  TableSet tables = q6_tables();

  EncodedTable got = run_plan(plan, catalog, tables);
  REQUIRE(got.row_count() == 1);
  double revenue = got.column("revenue").tensor.item<double>();
  CHECK(approx_rel(revenue, q6_fixture_revenue()));

  EncodedTable oracle = reference_interpreter(plan, catalog, tables);
  CHECK(tables_diff_ordered(got, oracle) == "");
}

TEST_CASE("Q6 lowering shape: one compact pass, one multiply, one scalar sum") {
  Catalog catalog = tpch_catalog();
  OperatorPlan op = plan_operators(sql::parse_and_plan(q6_sql(), catalog), catalog);
  REQUIRE(op.steps.size() == 4);
  CHECK(op.steps[0].kind == "scan");
  CHECK(op.steps[1].kind == "filter");
  CHECK(op.steps[2].kind == "aggregate");
  CHECK(op.steps[3].kind == "project");
  CHECK(count_instrs(op, InstrOp::Compact) == 1);
  CHECK(count_instrs(op, InstrOp::ArgsortStable) == 0);
  CHECK(count_instrs(op, InstrOp::SortPermRows) == 0);
  int muls = 0, sums = 0;
  for (const auto& s : op.steps) {
    for (const auto& i : s.instrs) {
      muls += i.op == InstrOp::Arith && i.arith == ArithOp::MUL && s.kind == "aggregate";
      sums += i.op == InstrOp::SegmentedReduce && i.reduce == ReduceOp::SUM;
    }
  }
  CHECK(sums == 1);
  CHECK(muls >= 1);  // the revenue product (plus the zero-ids helper)
}

TEST_CASE("Q14 fixture: join + case + like against the interpreter") {
  Catalog catalog = tpch_catalog();
  PlanPtr plan = sql::parse_and_plan(q14_sql(), catalog);

  std::vector<Row> lineitem{
      {int64_t{1}, int64_t{5}, 1000.0, 0.10, std::string("1995-09-10")},
      {int64_t{2}, int64_t{7}, 2000.0, 0.00, std::string("1995-09-20")},
      {int64_t{3}, int64_t{9}, 3000.0, 0.50, std::string("1995-10-01")},  // out of range
      {int64_t{1}, int64_t{2}, 500.0, 0.20, std::string("1995-09-30")},
  };
  std::vector<Row> part{
      {int64_t{1}, std::string("PROMO BRUSHED TIN")},
      {int64_t{2}, std::string("STANDARD POLISHED COPPER")},
      {int64_t{3}, std::string("PROMO PLATED BRASS")},
  };
  TableSet tables{{"lineitem", encode_table(lineitem_schema(), lineitem)},
                  {"part", encode_table(part_schema(), part)}};

  EncodedTable got = run_plan(plan, catalog, tables);
  EncodedTable oracle = reference_interpreter(plan, catalog, tables);
  CHECK(tables_diff_ordered(got, oracle) == "");

  // hand-rolled scalar oracle: promo = rows 0 and 3 (partkey 1), total adds row 1
  double promo = 1000.0 * 0.90 + 500.0 * 0.80;
  double total = promo + 2000.0 * 1.0;
  double expected = 100.0 * promo / total;
  CHECK(approx_rel(got.column("promo_revenue").tensor.item<double>(), expected));
}

TEST_CASE("filter edge cases") {
  Catalog catalog = tpch_catalog();
  TableSet tables = q6_tables();

  // literal-true predicate keeps everything (identity gathers)
  PlanPtr all = sql::parse_and_plan("SELECT l_partkey FROM lineitem WHERE 1 < 2", catalog);
  CHECK(run_plan(all, catalog, tables).row_count() == 6);

  PlanPtr none = sql::parse_and_plan("SELECT l_partkey FROM lineitem WHERE 2 < 1", catalog);
  CHECK(run_plan(none, catalog, tables).row_count() == 0);

  // n = 0 input losing nothing
  TableSet empty{{"lineitem", encode_table(lineitem_schema(), {})}};
  CHECK(run_plan(all, catalog, empty).row_count() == 0);
}

TEST_CASE("join: pairs, order, and empty sides") {
  Catalog c;
  c.add_table("l", {{"lk", LogicalType::Int64}, {"lv", LogicalType::Int64}});
  c.add_table("r", {{"rk", LogicalType::Int64}, {"rv", LogicalType::Int64}});
  PlanPtr plan = make_join(make_scan("l"), make_scan("r"), "lk", "rk");

  TableSchema ls{{"lk", LogicalType::Int64}, {"lv", LogicalType::Int64}};
  TableSchema rs{{"rk", LogicalType::Int64}, {"rv", LogicalType::Int64}};
  auto mk = [](TableSchema s, std::vector<std::pair<int64_t, int64_t>> rows) {
    std::vector<Row> out;
    for (auto [a, b] : rows) out.push_back({a, b});
    return encode_table(s, out);
  };

  TableSet tables{{"l", mk(ls, {{2, 100}, {1, 101}, {2, 102}, {9, 103}})},
                  {"r", mk(rs, {{2, 201}, {1, 202}, {2, 203}, {1, 204}})}};

  EncodedTable got = run_plan(plan, c, tables);
  EncodedTable oracle = reference_interpreter(plan, c, tables);
  CHECK(got.row_count() == 6);  // 2 matches twice for each of two left rows + 1x2
  CHECK(tables_diff_canonical(got, oracle) == "");

  // documented order: left row order, ties by right sorted order. Right rows
  // with key 2 sit at input positions 0 and 2; stable sort keeps 0 before 2.
  auto lv = got.column("lv").tensor.data<int64_t>();
  auto rv = got.column("rv").tensor.data<int64_t>();
  std::vector<int64_t> lv_want{100, 100, 101, 101, 102, 102};
  std::vector<int64_t> rv_want{201, 203, 202, 204, 201, 203};
  CHECK(std::vector<int64_t>(lv.begin(), lv.end()) == lv_want);
  CHECK(std::vector<int64_t>(rv.begin(), rv.end()) == rv_want);

  // empty right side
  TableSet empty_right{{"l", tables.at("l")}, {"r", mk(rs, {})}};
  CHECK(run_plan(plan, c, empty_right).row_count() == 0);
  // no key overlap
  TableSet disjoint{{"l", mk(ls, {{1, 1}})}, {"r", mk(rs, {{2, 2}})}};
  CHECK(run_plan(plan, c, disjoint).row_count() == 0);
}

TEST_CASE("join: zipf duplicates against the nested-loop oracle") {
  Catalog c;
  c.add_table("l", {{"k", LogicalType::Int64}, {"lv", LogicalType::Int64}});
  c.add_table("r", {{"k", LogicalType::Int64}, {"rv", LogicalType::Int64}});
  PlanPtr plan = make_join(make_scan("l"), make_scan("r"), "k", "k");

  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    auto lk = zipf_keys(rng, 80, 8);
    auto rk = zipf_keys(rng, 60, 8);
    std::vector<Row> lrows, rrows;
    for (size_t i = 0; i < lk.size(); ++i) {
      lrows.push_back({lk[i], static_cast<int64_t>(i)});
    }
    for (size_t i = 0; i < rk.size(); ++i) {
      rrows.push_back({rk[i], static_cast<int64_t>(1000 + i)});
    }
    TableSet tables{
        {"l", encode_table({{"k", LogicalType::Int64}, {"lv", LogicalType::Int64}}, lrows)},
        {"r", encode_table({{"k", LogicalType::Int64}, {"rv", LogicalType::Int64}}, rrows)}};
    EncodedTable got = run_plan(plan, c, tables);
    EncodedTable oracle = reference_interpreter(plan, c, tables);
    REQUIRE(tables_diff_canonical(got, oracle) == "");
  }
}

TEST_CASE("group-by: multi-key with strings, all five aggregates") {
  Catalog c;
  c.add_table("t", {{"g", LogicalType::Utf8},
                    {"h", LogicalType::Int64},
                    {"x", LogicalType::Float64},
                    {"n", LogicalType::Int64}});
  PlanPtr plan = make_aggregate(make_scan("t"), {"g", "h"},
                                {{"s", AggFn::Sum, col("x")},
                                 {"c", AggFn::Count, col("n")},
                                 {"a", AggFn::Avg, col("x")},
                                 {"lo", AggFn::Min, col("n")},
                                 {"hi", AggFn::Max, col("n")}});
  REQUIRE(validate(plan, c).empty());

  Rng rng(99);
  const char* groups[] = {"alpha", "beta", "gamma", "a", "ab", "é"};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Row> rows;
    size_t n = rng() % 120;
    for (size_t i = 0; i < n; ++i) {
      rows.push_back({std::string(groups[rng() % 6]), static_cast<int64_t>(rng() % 3),
                      random_f64(rng, 1, -50, 50)[0], static_cast<int64_t>(rng() % 1000)});
    }
    TableSet tables{{"t", encode_table({{"g", LogicalType::Utf8},
                                        {"h", LogicalType::Int64},
                                        {"x", LogicalType::Float64},
                                        {"n", LogicalType::Int64}},
                                       rows)}};
    EncodedTable got = run_plan(plan, c, tables);
    EncodedTable oracle = reference_interpreter(plan, c, tables);
    // both engines emit groups in ascending key order
    REQUIRE(tables_diff_ordered(got, oracle, 1e-9) == "");
  }
}

TEST_CASE("scalar aggregation over zero rows") {
  Catalog c;
  c.add_table("t", {{"x", LogicalType::Float64}});
  TableSet tables{{"t", encode_table({{"x", LogicalType::Float64}}, {})}};

  PlanPtr sums = make_aggregate(make_scan("t"), {},
                                {{"s", AggFn::Sum, col("x")}, {"n", AggFn::Count, col("x")}});
  EncodedTable got = run_plan(sums, c, tables);
  REQUIRE(got.row_count() == 1);
  CHECK(got.column("s").tensor.item<double>() == 0.0);
  CHECK(got.column("n").tensor.item<int64_t>() == 0);
  CHECK(tables_diff_ordered(got, reference_interpreter(sums, c, tables)) == "");

  for (AggFn fn : {AggFn::Min, AggFn::Max, AggFn::Avg}) {
    PlanPtr bad = make_aggregate(make_scan("t"), {}, {{"v", fn, col("x")}});
    CHECK_THROWS_AS(run_plan(bad, c, tables), ExecError);
    CHECK_THROWS_AS(reference_interpreter(bad, c, tables), ExecError);
  }

  // keyed aggregation over zero rows yields zero groups, no error
  PlanPtr keyed = make_aggregate(make_scan("t"), {"x"}, {{"v", AggFn::Min, col("x")}});
  CHECK(run_plan(keyed, c, tables).row_count() == 0);
}

TEST_CASE("sort: multi-key, mixed directions, strings, stability") {
  Catalog c;
  c.add_table("t", {{"a", LogicalType::Int64},
                    {"s", LogicalType::Utf8},
                    {"x", LogicalType::Float64},
                    {"id", LogicalType::Int64}});
  Rng rng(123);
  for (auto dirs : std::vector<std::pair<bool, bool>>{{true, true}, {false, true}, {true, false},
                                                      {false, false}}) {
    PlanPtr plan = make_sort(make_scan("t"), {{"a", dirs.first}, {"s", dirs.second}});
    std::vector<Row> rows;
    const char* words[] = {"pear", "fig", "fig", "apple", "", "péche"};
    for (int i = 0; i < 60; ++i) {
      rows.push_back({static_cast<int64_t>(rng() % 4), std::string(words[rng() % 6]),
                      random_f64(rng, 1, -5, 5)[0], static_cast<int64_t>(i)});
    }
    TableSet tables{{"t", encode_table({{"a", LogicalType::Int64},
                                        {"s", LogicalType::Utf8},
                                        {"x", LogicalType::Float64},
                                        {"id", LogicalType::Int64}},
                                       rows)}};
    EncodedTable got = run_plan(plan, c, tables);
    EncodedTable oracle = reference_interpreter(plan, c, tables);
    REQUIRE(tables_diff_ordered(got, oracle) == "");
  }
}

TEST_CASE("limit") {
  Catalog catalog = tpch_catalog();
  TableSet tables = q6_tables();
  auto run_limit = [&](int64_t k) {
    PlanPtr p = make_limit(make_scan("lineitem"), k);
    return run_plan(p, catalog, tables).row_count();
  };
  CHECK(run_limit(0) == 0);
  CHECK(run_limit(3) == 3);
  CHECK(run_limit(100) == 6);

  // limit preserves the leading rows
  PlanPtr p = make_limit(make_scan("lineitem"), 2);
  EncodedTable got = run_plan(p, catalog, tables);
  CHECK(got.column("l_partkey").tensor.at<int64_t>(0) == 1);
  CHECK(got.column("l_partkey").tensor.at<int64_t>(1) == 2);
}

TEST_CASE("string predicates and case expressions end to end") {
  Catalog c;
  c.add_table("t", {{"s", LogicalType::Utf8}, {"x", LogicalType::Float64}});
  std::vector<Row> rows{{std::string("PROMO TIN"), 1.0},
                        {std::string("STANDARD"), 2.0},
                        {std::string("PROMO"), 3.0},
                        {std::string(""), 4.0},
                        {std::string("abc PROMO"), 5.0}};
  TableSet tables{
      {"t", encode_table({{"s", LogicalType::Utf8}, {"x", LogicalType::Float64}}, rows)}};

  for (const char* sql : {
           "SELECT x FROM t WHERE s LIKE 'PROMO%'",
           "SELECT x FROM t WHERE s LIKE '%PROMO'",
           "SELECT x FROM t WHERE s LIKE '%PROMO%'",
           "SELECT x FROM t WHERE s LIKE 'PROMO'",
           "SELECT x FROM t WHERE s LIKE '%'",
           "SELECT x FROM t WHERE s = 'PROMO'",
           "SELECT x FROM t WHERE s <> ''",
           "SELECT x FROM t WHERE s < 'PROMO'",
           "SELECT x FROM t WHERE s >= 'PROMO'",
           "SELECT CASE WHEN s LIKE 'PROMO%' THEN s ELSE 'other things' END AS tag FROM t",
           "SELECT CASE WHEN x > 2.5 THEN 'big' ELSE s END AS tag FROM t",
       }) {
    CAPTURE(sql);
    PlanPtr plan = sql::parse_and_plan(sql, c);
    REQUIRE(validate(plan, c).empty());
    EncodedTable got = run_plan(plan, c, tables);
    EncodedTable oracle = reference_interpreter(plan, c, tables);
    REQUIRE(tables_diff_ordered(got, oracle) == "");
  }
}

TEST_CASE("determinism and backend equivalence") {
  Catalog catalog = tpch_catalog();
  PlanPtr plan = sql::parse_and_plan(q6_sql(), catalog);
  TableSet tables = q6_tables();
  ParallelBackend par(4);

  Executor ref_ex(plan_operators(plan, catalog), reference_backend());
  Executor par_ex(plan_operators(plan, catalog), par);

  EncodedTable a = ref_ex.execute(tables);
  EncodedTable b = ref_ex.execute(tables);
  // bit-identical across runs
  CHECK(a.column("revenue").tensor.item<double>() == b.column("revenue").tensor.item<double>());

  EncodedTable p1 = par_ex.execute(tables);
  EncodedTable p2 = par_ex.execute(tables);
  CHECK(p1.column("revenue").tensor.item<double>() ==
        p2.column("revenue").tensor.item<double>());
  CHECK(approx_rel(a.column("revenue").tensor.item<double>(),
                   p1.column("revenue").tensor.item<double>()));
}

TEST_CASE("profiling: one trace entry per relational operator, oracle cardinalities") {
  Catalog catalog = tpch_catalog();
  PlanPtr plan = sql::parse_and_plan(q6_sql(), catalog);
  TableSet tables = q6_tables();

  Executor ex(plan_operators(plan, catalog), reference_backend());
  ProfileTrace trace;
  EncodedTable got = ex.profile_execute(tables, trace);
  CHECK(trace.backend == "ref");
  REQUIRE(trace.operators.size() == 4);
  CHECK(trace.operators[0].kind == "scan");
  CHECK(trace.operators[1].kind == "filter");
  CHECK(trace.operators[2].kind == "aggregate");
  CHECK(trace.operators[3].kind == "project");
  for (const auto& op : trace.operators) CHECK(op.wall_ns > 0);
  CHECK(trace.total_kernel_ns() > 0);

  // rows-out per operator matches the row oracle
  InterpreterStats stats;
  reference_interpreter(plan, catalog, tables, &stats);
  REQUIRE(stats.rows_out.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(trace.operators[i].rows_out == stats.rows_out[i]);
  }

  // profiled result equals the plain result
  CHECK(tables_diff_ordered(got, ex.execute(tables)) == "");

  // chrome trace is valid JSON with the right event shape
  std::string json = trace.to_chrome_json();
  CHECK(json.find("\"ph\": \"X\"") != std::string::npos);
  CHECK(json.find("\"dur\"") != std::string::npos);
}

TEST_CASE("runtime errors carry the operator id") {
  Catalog c;
  c.add_table("t", {{"x", LogicalType::Float64}});
  TableSet tables{{"t", encode_table({{"x", LogicalType::Float64}}, {{1.0}, {0.0}})}};
  PlanPtr plan = sql::parse_and_plan("SELECT 1.0 / x AS inv FROM t", c);
  try {
    run_plan(plan, c, tables);
    FAIL("expected ExecError");
  } catch (const ExecError& e) {
    std::string msg = e.what();
    CHECK(msg.find("project#") != std::string::npos);
    CHECK(msg.find("division by zero") != std::string::npos);
  }
  CHECK_THROWS_AS(reference_interpreter(plan, c, tables), ExecError);
}

TEST_CASE("input binding errors") {
  Catalog catalog = tpch_catalog();
  PlanPtr plan = sql::parse_and_plan(q6_sql(), catalog);
  Executor ex(plan_operators(plan, catalog), reference_backend());
  CHECK_THROWS_WITH_AS(ex.execute({}), doctest::Contains("no input table"), ExecError);
  // wrong column type
  TableSet bad{{"lineitem", encode_table({{"l_partkey", LogicalType::Float64},
                                          {"l_quantity", LogicalType::Int64},
                                          {"l_extendedprice", LogicalType::Float64},
                                          {"l_discount", LogicalType::Float64},
                                          {"l_shipdate", LogicalType::Date}},
                                         {})}};
  CHECK_THROWS_WITH_AS(ex.execute(bad), doctest::Contains("the plan expects"), ExecError);
}

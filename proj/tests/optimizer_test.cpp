#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/fixtures.hpp"
#include "support/table_compare.hpp"
#include "tensql/exec/executor.hpp"
#include "tensql/optimizer.hpp"
#include "tensql/sql.hpp"

using namespace tensql;
using namespace tensql::testing;

namespace {

Catalog simple_catalog() {
  Catalog c;
  c.add_table("t", {{"x", LogicalType::Float64},
                    {"y", LogicalType::Float64},
                    {"s", LogicalType::Utf8},
                    {"day", LogicalType::Date}});
  return c;
}

EncodedTable run_plan(const PlanPtr& plan, const Catalog& catalog, const TableSet& tables) {
  Executor ex(plan_operators(plan, catalog), reference_backend());
  return ex.execute(tables);
}

}  // namespace

TEST_CASE("fold_constants: arithmetic, comparisons, dates") {
  Catalog c = simple_catalog();
  Rule fold = fold_constants_rule();

  // (1.0 - 0.07) + 0.0 folds to a single literal
  ExprPtr arith = make_arith(ArithOp::ADD,
                             make_arith(ArithOp::SUB, lit_f64(1.0), lit_f64(0.07)),
                             lit_f64(0.0));
  PlanPtr p = make_project(make_scan("t"), {{"v", arith}});
  auto folded = fold.rewrite(p, c);
  REQUIRE(folded.has_value());
  const auto& item = std::get<ProjectNode>((*folded)->node).items[0];
  const auto* lit = std::get_if<Literal>(&item.expr->node);
  REQUIRE(lit);
  CHECK(std::get<double>(lit->value) == (1.0 - 0.07) + 0.0);

  // date literals are pre-encoded to nanoseconds
  PlanPtr q = make_filter(make_scan("t"),
                          make_compare(CompareOp::GE, col("day"), lit_date("1994-01-01")));
  auto fq = fold.rewrite(q, c);
  REQUIRE(fq.has_value());
  const auto& pred = std::get<FilterNode>((*fq)->node).predicate;
  const auto& rhs = std::get<CompareExpr>(pred->node).right;
  const auto* date_lit = std::get_if<Literal>(&rhs->node);
  REQUIRE(date_lit);
  CHECK(std::holds_alternative<int64_t>(date_lit->value));
  CHECK(std::get<int64_t>(date_lit->value) == 757'382'400'000'000'000);

  // literal comparisons and logicals collapse to booleans
  PlanPtr r = make_filter(
      make_scan("t"),
      make_logical(LogicalOp::AND, make_compare(CompareOp::LT, lit_i64(1), lit_i64(2)),
                   make_not(lit_bool(false))));
  auto fr = fold.rewrite(r, c);
  REQUIRE(fr.has_value());
  const auto* b = std::get_if<Literal>(&std::get<FilterNode>((*fr)->node).predicate->node);
  REQUIRE(b);
  CHECK(std::get<bool>(b->value) == true);

  // folds that would error stay unfolded
  PlanPtr div = make_project(make_scan("t"),
                             {{"v", make_arith(ArithOp::DIV, lit_f64(1.0), lit_f64(0.0))}});
  CHECK(!fold.rewrite(div, c).has_value());
  PlanPtr ovf = make_project(
      make_scan("t"), {{"v", make_arith(ArithOp::ADD, lit_i64(INT64_MAX), lit_i64(1))}});
  CHECK(!fold.rewrite(ovf, c).has_value());
}

TEST_CASE("fuse_filters") {
  Catalog c = simple_catalog();
  ExprPtr p1 = make_compare(CompareOp::GT, col("x"), lit_f64(0.0));
  ExprPtr p2 = make_compare(CompareOp::LT, col("y"), lit_f64(1.0));
  PlanPtr stacked = make_filter(make_filter(make_scan("t"), p1), p2);
  auto fused = fuse_filters_rule().rewrite(stacked, c);
  REQUIRE(fused.has_value());
  PlanPtr want = make_filter(make_scan("t"), make_logical(LogicalOp::AND, p1, p2));
  CHECK(plan_equal(*fused, want));
  CHECK(!fuse_filters_rule().rewrite(want, c).has_value());
}

TEST_CASE("simplify_case") {
  Catalog c = simple_catalog();
  // constant-true first branch
  ExprPtr case_expr = make_case({{lit_bool(true), col("x")}}, col("y"));
  PlanPtr p = make_project(make_scan("t"), {{"v", case_expr}});
  auto s = simplify_case_rule().rewrite(p, c);
  REQUIRE(s.has_value());
  const auto& item = std::get<ProjectNode>((*s)->node).items[0];
  CHECK(expr_equal(item.expr, col("x")));

  // LIKE '%' matches everything
  PlanPtr q = make_filter(make_scan("t"), make_like(col("s"), "%"));
  auto sq = simplify_case_rule().rewrite(q, c);
  REQUIRE(sq.has_value());
  CHECK(expr_equal(std::get<FilterNode>((*sq)->node).predicate, lit_bool(true)));

  // non-constant case untouched
  ExprPtr keep = make_case({{make_compare(CompareOp::GT, col("x"), lit_f64(0.0)), col("x")}},
                           col("y"));
  CHECK(!simplify_case_rule().rewrite(make_project(make_scan("t"), {{"v", keep}}), c)
             .has_value());
}

TEST_CASE("prune_columns narrows the Q6 scan") {
  Catalog catalog = tpch_catalog();
  PlanPtr q6 = sql::parse_and_plan(q6_sql(), catalog);
  auto pruned = prune_columns_rule().rewrite(q6, catalog);
  REQUIRE(pruned.has_value());
  // find the scan at the bottom
  const PlanNode* node = pruned->get();
  while (!std::holds_alternative<ScanNode>(node->node)) {
    node = std::visit(
        [](const auto& x) -> const PlanNode* {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ScanNode>) {
            return nullptr;
          } else if constexpr (std::is_same_v<T, JoinNode>) {
            return x.left.get();
          } else {
            return x.input.get();
          }
        },
        node->node);
  }
  const auto& scan = std::get<ScanNode>(node->node);
  REQUIRE(scan.columns.has_value());
  // l_partkey is never referenced by Q6
  std::vector<std::string> want{"l_quantity", "l_extendedprice", "l_discount", "l_shipdate"};
  CHECK(*scan.columns == want);
}

TEST_CASE("optimize: fixed point, pass counts, schema guard") {
  Catalog catalog = tpch_catalog();

  // already-optimal plan comes back unchanged
  Catalog c = simple_catalog();
  PlanPtr optimal =
      make_filter(make_scan("t", {{"x"}}), make_compare(CompareOp::GT, col("x"), lit_f64(0.0)));
  int passes = 0;
  PlanPtr out = optimize(optimal, c, default_rules(), 10, &passes);
  CHECK(plan_equal(out, optimal));
  CHECK(passes == 1);

  // Q6 and Q14 reach a fixed point within three passes
  for (const auto& text : {q6_sql(), q14_sql()}) {
    PlanPtr p = sql::parse_and_plan(text, catalog);
    passes = 0;
    PlanPtr opt = optimize(p, catalog, default_rules(), 10, &passes);
    CHECK(passes <= 3);
    CHECK(validate(opt, catalog).empty());
    // optimizing again changes nothing
    int passes2 = 0;
    PlanPtr opt2 = optimize(opt, catalog, default_rules(), 10, &passes2);
    CHECK(plan_equal(opt, opt2));
    CHECK(passes2 == 1);
  }

  // a schema-breaking rule is an internal error naming the rule
  Rule broken{"rename_everything", [](const PlanPtr& p, const Catalog&) -> std::optional<PlanPtr> {
                if (!std::holds_alternative<ProjectNode>(p->node)) return std::nullopt;
                auto proj = std::get<ProjectNode>(p->node);
                auto items = proj.items;
                items[0].name = "zzz_renamed";
                return make_project(proj.input, items);
              }};
  PlanPtr q6 = sql::parse_and_plan(q6_sql(), catalog);
  CHECK_THROWS_WITH_AS(optimize(q6, catalog, {broken}, 10, nullptr),
                       doctest::Contains("rename_everything"), PlanError);
}

TEST_CASE("optimized plans execute identically on the fixtures") {
  Catalog catalog = tpch_catalog();
  TableSet tables{{"lineitem", encode_table(lineitem_schema(), q6_fixture_rows())},
                  {"part", encode_table(part_schema(),
                                        {{int64_t{1}, std::string("PROMO BRUSHED TIN")},
                                         {int64_t{2}, std::string("STANDARD BRASS")},
                                         {int64_t{3}, std::string("PROMO PLATED COPPER")},
                                         {int64_t{4}, std::string("ECONOMY TIN")},
                                         {int64_t{5}, std::string("LARGE STEEL")},
                                         {int64_t{6}, std::string("PROMO ANODIZED NICKEL")}})}};

  std::vector<std::string> queries{
      q6_sql(),
      "SELECT l_partkey, p_type FROM lineitem, part WHERE l_partkey = p_partkey AND "
      "l_quantity < 25",
      "SELECT CASE WHEN TRUE THEN l_quantity ELSE 0 END AS q FROM lineitem WHERE "
      "l_shipdate >= DATE '1994-01-01'",
      "SELECT AVG(l_extendedprice) AS avg_price, COUNT(*) AS n FROM lineitem GROUP BY "
      "l_discount",
  };
  // Q14 over the fixture tables (every partkey resolves)
  queries.push_back(
      "SELECT 100.00 * SUM(CASE WHEN p_type LIKE 'PROMO%' THEN l_extendedprice * "
      "(1 - l_discount) ELSE 0 END) / SUM(l_extendedprice * (1 - l_discount)) AS pr "
      "FROM lineitem, part WHERE l_partkey = p_partkey");

  for (const auto& sql : queries) {
    CAPTURE(sql);
    PlanPtr p = sql::parse_and_plan(sql, catalog);
    PlanPtr opt = optimize(p, catalog);
    EncodedTable plain = run_plan(p, catalog, tables);
    EncodedTable optimized = run_plan(opt, catalog, tables);
    REQUIRE(tables_diff_canonical(plain, optimized) == "");
    // and both agree with the row oracle
    REQUIRE(tables_diff_canonical(optimized, reference_interpreter(p, catalog, tables)) == "");
  }
}

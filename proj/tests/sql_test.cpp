#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/fixtures.hpp"
#include "support/test_util.hpp"
#include "tensql/sql.hpp"

using namespace tensql;
using namespace tensql::sql;
using namespace tensql::testing;

namespace {

const FilterNode* as_filter(const PlanPtr& p) { return std::get_if<FilterNode>(&p->node); }
const ProjectNode* as_project(const PlanPtr& p) { return std::get_if<ProjectNode>(&p->node); }
const AggregateNode* as_aggregate(const PlanPtr& p) {
  return std::get_if<AggregateNode>(&p->node);
}
const JoinNode* as_join(const PlanPtr& p) { return std::get_if<JoinNode>(&p->node); }
const ScanNode* as_scan(const PlanPtr& p) { return std::get_if<ScanNode>(&p->node); }

size_t count_conjuncts(const ExprPtr& e) {
  if (const auto* lg = std::get_if<LogicalExpr>(&e->node); lg && lg->op == LogicalOp::AND) {
    return count_conjuncts(lg->left) + count_conjuncts(lg->right);
  }
  return 1;
}

}  // namespace

TEST_CASE("tokenize") {
  auto toks = tokenize("SELECT x, 1.5 FROM t WHERE a <= 'abc'");
  CHECK(toks[0].kind == TokenKind::Ident);
  CHECK(toks[0].text == "SELECT");
  CHECK(toks[3].kind == TokenKind::Float);
  CHECK(toks.back().kind == TokenKind::End);
  CHECK_THROWS_AS(tokenize("a ; b"), SqlError);
  CHECK_THROWS_AS(tokenize("'unterminated"), SqlError);
}

TEST_CASE("parse Q6: four filter conjuncts, one aggregate") {
  Ast ast = parse(q6_sql());
  CHECK(ast.select.size() == 1);
  CHECK(ast.select[0].alias == "revenue");
  CHECK(std::holds_alternative<AstAggCall>(ast.select[0].expr->node));
  CHECK(ast.from.name == "lineitem");
  CHECK(!ast.comma_table);
  REQUIRE(ast.where != nullptr);
  // shipdate >= , shipdate <, BETWEEN, quantity <
  size_t conjuncts = 0;
  std::function<void(const AstExprPtr&)> walk = [&](const AstExprPtr& e) {
    if (const auto* lg = std::get_if<AstLogical>(&e->node); lg && lg->op == LogicalOp::AND) {
      walk(lg->left);
      walk(lg->right);
      return;
    }
    ++conjuncts;
  };
  walk(ast.where);
  CHECK(conjuncts == 4);
}

TEST_CASE("parse Q14: join, case, like") {
  Ast ast = parse(q14_sql());
  REQUIRE(ast.comma_table.has_value());
  CHECK(ast.comma_table->name == "part");
  bool saw_case = false, saw_like = false;
  std::function<void(const AstExprPtr&)> walk = [&](const AstExprPtr& e) {
    if (!e) return;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, AstCase>) {
            saw_case = true;
            for (const auto& br : x.branches) {
              walk(br.when);
              walk(br.then);
            }
            walk(x.else_value);
          } else if constexpr (std::is_same_v<T, AstLike>) {
            saw_like = true;
            walk(x.input);
          } else if constexpr (std::is_same_v<T, AstArith> || std::is_same_v<T, AstCompare> ||
                               std::is_same_v<T, AstLogical>) {
            walk(x.left);
            walk(x.right);
          } else if constexpr (std::is_same_v<T, AstAggCall>) {
            walk(x.arg);
          } else if constexpr (std::is_same_v<T, AstNot>) {
            walk(x.input);
          } else if constexpr (std::is_same_v<T, AstBetween>) {
            walk(x.input);
            walk(x.lo);
            walk(x.hi);
          }
        },
        e->node);
  };
  for (const auto& item : ast.select) walk(item.expr);
  CHECK(saw_case);
  CHECK(saw_like);
}

TEST_CASE("syntax errors carry offsets") {
  try {
    parse("SELEC 1");
    FAIL("expected SqlError");
  } catch (const SqlError& e) {
    CHECK(e.offset() == 0);
    CHECK(std::string(e.what()).find("SELECT") != std::string::npos);
  }
  try {
    parse("SELECT a FROM");
    FAIL("expected SqlError");
  } catch (const SqlError& e) {
    CHECK(std::string(e.what()).find("table name") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("SELECT CASE WHEN TRUE THEN 1 END FROM t"), SqlError);  // no ELSE
  CHECK_THROWS_AS(parse("SELECT a FROM t WHERE DATE '1994-13-01' = b"), SqlError);
}

TEST_CASE("plan Q6: filter pushed below scalar aggregate") {
  Catalog catalog = tpch_catalog();
  PlanPtr p = parse_and_plan(q6_sql(), catalog);
  const auto* project = as_project(p);
  REQUIRE(project);
  CHECK(project->items.size() == 1);
  CHECK(project->items[0].name == "revenue");
  const auto* agg = as_aggregate(project->input);
  REQUIRE(agg);
  CHECK(agg->keys.empty());
  REQUIRE(agg->aggs.size() == 1);
  CHECK(agg->aggs[0].fn == AggFn::Sum);
  const auto* filter = as_filter(agg->input);
  REQUIRE(filter);
  CHECK(count_conjuncts(filter->predicate) == 4);
  CHECK(as_scan(filter->input));
  CHECK(validate(p, catalog).empty());

  Schema s = infer_schema(p, catalog);
  REQUIRE(s.size() == 1);
  CHECK(s[0].name == "revenue");
  CHECK(s[0].type == LogicalType::Float64);

  // planning is deterministic
  CHECK(plan_equal(p, parse_and_plan(q6_sql(), catalog)));
}

TEST_CASE("plan Q14: comma join becomes equi-join with pushed filters") {
  Catalog catalog = tpch_catalog();
  PlanPtr p = parse_and_plan(q14_sql(), catalog);
  const auto* project = as_project(p);
  REQUIRE(project);
  const auto* agg = as_aggregate(project->input);
  REQUIRE(agg);
  CHECK(agg->aggs.size() == 2);
  const auto* join = as_join(agg->input);
  REQUIRE(join);
  CHECK(join->left_key == "l_partkey");
  CHECK(join->right_key == "p_partkey");
  // date conjuncts pushed to the lineitem side
  const auto* lf = as_filter(join->left);
  REQUIRE(lf);
  CHECK(count_conjuncts(lf->predicate) == 2);
  CHECK(as_scan(join->right));
  CHECK(validate(p, catalog).empty());
  Schema s = infer_schema(p, catalog);
  REQUIRE(s.size() == 1);
  CHECK(s[0].name == "promo_revenue");
}

TEST_CASE("planning errors") {
  Catalog catalog = tpch_catalog();
  CHECK_THROWS_AS(parse_and_plan("SELECT x FROM nosuch", catalog), SqlError);
  CHECK_THROWS_AS(parse_and_plan("SELECT nosuch FROM lineitem", catalog), SqlError);
  // aggregate mixed with non-grouped column
  CHECK_THROWS_WITH_AS(
      parse_and_plan("SELECT SUM(l_quantity), l_partkey FROM lineitem", catalog),
      doctest::Contains("GROUP BY"), SqlError);
  // comma join without an equality
  CHECK_THROWS_WITH_AS(
      parse_and_plan("SELECT l_quantity FROM lineitem, part WHERE l_quantity < 5", catalog),
      doctest::Contains("equality"), SqlError);
  // non-equi explicit join
  CHECK_THROWS_AS(
      parse_and_plan("SELECT l_quantity FROM lineitem JOIN part ON l_partkey < p_partkey",
                     catalog),
      SqlError);
  CHECK_THROWS_WITH_AS(
      parse_and_plan("SELECT l_quantity FROM lineitem, lineitem WHERE l_partkey = l_partkey",
                     catalog),
      doctest::Contains("self-join"), SqlError);
  // aggregates cannot appear in WHERE
  CHECK_THROWS_AS(
      parse_and_plan("SELECT l_quantity FROM lineitem WHERE SUM(l_quantity) > 5 GROUP BY "
                     "l_quantity",
                     catalog),
      SqlError);
  // integer division is promoted, not an error
  CHECK_NOTHROW(parse_and_plan("SELECT 1 / 2 AS half FROM lineitem", catalog));
}

TEST_CASE("explicit JOIN ON and residual filters") {
  Catalog catalog = tpch_catalog();
  PlanPtr p = parse_and_plan(
      "SELECT l_quantity, p_type FROM lineitem JOIN part ON l_partkey = p_partkey "
      "WHERE l_quantity < 10 AND l_quantity + p_partkey > 20",
      catalog);
  const auto* project = as_project(p);
  REQUIRE(project);
  const auto* residual = as_filter(project->input);
  REQUIRE(residual);  // cross-table conjunct stays above the join
  const auto* join = as_join(residual->input);
  REQUIRE(join);
  const auto* lf = as_filter(join->left);
  REQUIRE(lf);  // l_quantity < 10 pushed down
  CHECK(validate(p, catalog).empty());
}

TEST_CASE("PREDICT registration and arity checks") {
  Catalog catalog = tpch_catalog();
  ModelSpec linear;
  linear.kind = ModelKind::Linear;
  linear.weights = {2.0, -1.0};
  linear.bias = 0.5;
  catalog.register_model("pricer", linear);
  CHECK_THROWS_AS(catalog.register_model("pricer", linear), PlanError);

  PlanPtr p = parse_and_plan(
      "SELECT PREDICT(pricer, l_extendedprice, l_discount) AS score FROM lineitem", catalog);
  CHECK(validate(p, catalog).empty());
  Schema s = infer_schema(p, catalog);
  CHECK(s[0].type == LogicalType::Float64);

  CHECK_THROWS_WITH_AS(
      parse_and_plan("SELECT PREDICT(pricer, l_extendedprice) AS s FROM lineitem", catalog),
      doctest::Contains("2 arguments"), SqlError);
  CHECK_THROWS_WITH_AS(
      parse_and_plan("SELECT PREDICT(ghost, l_extendedprice) AS s FROM lineitem", catalog),
      doctest::Contains("unknown model"), SqlError);
}

namespace {

// Random Ast generator for the parse/print round-trip property.
class AstGen {
 public:
  explicit AstGen(Rng& rng) : rng_(rng) {}

  Ast gen() {
    Ast ast;
    ast.from = {"t" + std::to_string(rng_() % 3), 0};
    bool agg_mode = rng_() % 3 == 0;
    if (rng_() % 4 == 0) {
      ast.comma_table = TableRef{"u" + std::to_string(rng_() % 2), 0};
    } else if (rng_() % 4 == 0) {
      ast.join_table = TableRef{"u" + std::to_string(rng_() % 2), 0};
      ast.join_on = node(AstCompare{CompareOp::EQ, colref(), colref()});
    }
    size_t items = 1 + rng_() % 3;
    for (size_t i = 0; i < items; ++i) {
      SelectItem item;
      item.expr = agg_mode && rng_() % 2 ? agg_call() : expr(3);
      if (rng_() % 2) item.alias = ident();
      ast.select.push_back(item);
    }
    if (rng_() % 2) ast.where = expr(3);
    if (agg_mode) {
      size_t keys = rng_() % 3;
      for (size_t i = 0; i < keys; ++i) ast.group_by.emplace_back(ident(), 0);
    }
    if (rng_() % 3 == 0) ast.limit = static_cast<int64_t>(rng_() % 100);
    return ast;
  }

 private:
  template <typename T>
  AstExprPtr node(T&& n) {
    return std::make_shared<const AstExpr>(AstExpr{0, std::forward<T>(n)});
  }

  std::string ident() {
    static const char* pool[] = {"a", "b", "c", "price", "qty", "flag", "name"};
    return pool[rng_() % 7];
  }

  AstExprPtr colref() { return node(AstCol{ident()}); }

  AstExprPtr literal() {
    switch (rng_() % 5) {
      case 0: return node(AstLit{LogicalType::Int64, static_cast<int64_t>(rng_() % 1000) - 500});
      case 1: {
        double v = static_cast<double>(static_cast<int64_t>(rng_() % 10000) - 5000) / 8.0;
        return node(AstLit{LogicalType::Float64, v});
      }
      case 2: return node(AstLit{LogicalType::Bool, rng_() % 2 == 0});
      case 3: return node(AstLit{LogicalType::Utf8, std::string("s") + ident()});
      default: return node(AstLit{LogicalType::Date, std::string("1996-07-1") +
                                                         std::to_string(rng_() % 10 ? 1 : 2)});
    }
  }

  AstExprPtr agg_call() {
    AggFn fn = static_cast<AggFn>(rng_() % 5);
    if (fn == AggFn::Count && rng_() % 2) return node(AstAggCall{fn, nullptr, true});
    return node(AstAggCall{fn, expr(2), false});
  }

  AstExprPtr expr(int depth) {
    if (depth == 0 || rng_() % 3 == 0) {
      return rng_() % 2 ? colref() : literal();
    }
    switch (rng_() % 8) {
      case 0:
        return node(AstArith{static_cast<ArithOp>(rng_() % 4), expr(depth - 1), expr(depth - 1)});
      case 1:
        return node(
            AstCompare{static_cast<CompareOp>(rng_() % 6), expr(depth - 1), expr(depth - 1)});
      case 2:
        return node(AstLogical{rng_() % 2 ? LogicalOp::AND : LogicalOp::OR, expr(depth - 1),
                               expr(depth - 1)});
      case 3: return node(AstNot{expr(depth - 1)});
      case 4: return node(AstBetween{expr(depth - 1), expr(depth - 1), expr(depth - 1)});
      case 5: {
        AstCase c;
        size_t branches = 1 + rng_() % 2;
        for (size_t i = 0; i < branches; ++i) c.branches.push_back({expr(depth - 1), expr(depth - 1)});
        c.else_value = expr(depth - 1);
        return node(std::move(c));
      }
      case 6: {
        static const char* pats[] = {"PROMO%", "%x", "%mid%", "exact", "%"};
        return node(AstLike{expr(depth - 1), pats[rng_() % 5]});
      }
      default: {
        std::vector<AstExprPtr> args;
        size_t n = rng_() % 3;
        for (size_t i = 0; i < n; ++i) args.push_back(expr(depth - 1));
        return node(AstPredict{"m" + std::to_string(rng_() % 2), std::move(args)});
      }
    }
  }

  Rng& rng_;
};

}  // namespace

TEST_CASE("parse(print(ast)) round-trips 300 random Asts") {
  Rng rng(2024);
  AstGen gen(rng);
  for (int i = 0; i < 300; ++i) {
    Ast ast = gen.gen();
    std::string sql = print(ast);
    CAPTURE(sql);
    Ast back = parse(sql);
    REQUIRE(ast_equal(ast, back));
    // printing is a fixed point
    REQUIRE(print(back) == sql);
  }
  // and the fixtures too
  for (const auto& text : {q6_sql(), q14_sql()}) {
    Ast ast = parse(text);
    REQUIRE(ast_equal(ast, parse(print(ast))));
  }
}

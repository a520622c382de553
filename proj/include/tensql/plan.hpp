#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tensql/expr.hpp"
#include "tensql/ml/model.hpp"

namespace tensql {

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

// Physical relational operators. Trees are immutable and share subtrees
// freely; rewrites build new nodes.
struct ScanNode {
  std::string table;
  // When present, the scan materializes only these columns (set by the
  // column-pruning rule; order follows the listing).
  std::optional<std::vector<std::string>> columns;
};
struct FilterNode {
  PlanPtr input;
  ExprPtr predicate;
};
struct ProjectNode {
  struct Item {
    std::string name;
    ExprPtr expr;
  };
  PlanPtr input;
  std::vector<Item> items;
};
enum class JoinKind : uint8_t { Inner };
struct JoinNode {
  PlanPtr left, right;
  std::string left_key, right_key;
  JoinKind kind = JoinKind::Inner;
};
enum class AggFn : uint8_t { Sum, Count, Avg, Min, Max };
const char* agg_fn_name(AggFn fn);
struct AggregateNode {
  struct Agg {
    std::string name;
    AggFn fn;
    ExprPtr expr;
  };
  PlanPtr input;
  std::vector<std::string> keys;  // empty keys = scalar aggregation (one row)
  std::vector<Agg> aggs;
};
struct SortNode {
  struct Key {
    std::string column;
    bool ascending = true;
  };
  PlanPtr input;
  std::vector<Key> keys;
};
struct LimitNode {
  PlanPtr input;
  int64_t count = 0;
};

struct PlanNode {
  std::variant<ScanNode, FilterNode, ProjectNode, JoinNode, AggregateNode, SortNode, LimitNode>
      node;
};

const char* plan_tag(const PlanNode& p);

PlanPtr make_scan(std::string table, std::optional<std::vector<std::string>> columns = {});
PlanPtr make_filter(PlanPtr input, ExprPtr predicate);
PlanPtr make_project(PlanPtr input, std::vector<ProjectNode::Item> items);
PlanPtr make_join(PlanPtr left, PlanPtr right, std::string left_key, std::string right_key);
PlanPtr make_aggregate(PlanPtr input, std::vector<std::string> keys,
                       std::vector<AggregateNode::Agg> aggs);
PlanPtr make_sort(PlanPtr input, std::vector<SortNode::Key> keys);
PlanPtr make_limit(PlanPtr input, int64_t count);

bool plan_equal(const PlanPtr& a, const PlanPtr& b);

// The output schema of a plan node is an ordered column list; TableSchema
// from the columnar layer doubles as the schema type.
using Schema = TableSchema;

const ColumnSpec* schema_find(const Schema& s, std::string_view name);
int schema_index(const Schema& s, std::string_view name);

struct Catalog {
  std::vector<std::pair<std::string, TableSchema>> tables;
  std::vector<std::pair<std::string, ModelSpec>> models;

  const TableSchema* find_table(std::string_view name) const;
  const ModelSpec* find_model(std::string_view name) const;
  void add_table(std::string name, TableSchema schema);
  // PREDICT(name, ...) resolves against this entry from then on.
  void register_model(std::string name, ModelSpec spec);
};

// Output column types of an expression/plan. Throws PlanError on unresolved
// columns, type mismatches, or malformed nodes.
LogicalType infer_expr_type(const ExprPtr& e, const Schema& input, const Catalog& catalog);
Schema infer_schema(const PlanPtr& plan, const Catalog& catalog);

struct Diagnostic {
  std::string path;  // node path from the root, e.g. "aggregate.input.filter"
  std::string message;
};

// Non-throwing validation; returns every independent problem found.
std::vector<Diagnostic> validate(const PlanPtr& plan, const Catalog& catalog);

// Children-first traversal order; shared by the executor and the row
// interpreter so per-operator ids line up.
std::vector<const PlanNode*> plan_nodes_postorder(const PlanPtr& plan);

// Every column name referenced anywhere in the expression.
void collect_expr_columns(const ExprPtr& e, std::vector<std::string>& out);

}  // namespace tensql

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tensql/plan.hpp"

namespace tensql::sql {

// Syntax or planning error anchored to a byte offset in the statement.
class SqlError : public std::runtime_error {
 public:
  SqlError(std::string message, size_t offset)
      : std::runtime_error(std::move(message)), offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

enum class TokenKind : uint8_t {
  Ident,
  Int,
  Float,
  String,
  Comma,
  LParen,
  RParen,
  Star,
  Plus,
  Minus,
  Slash,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  End,
};

struct Token {
  TokenKind kind;
  std::string text;  // identifiers keep source case; strings hold the body
  size_t offset;
};

std::vector<Token> tokenize(const std::string& sql);

struct AstExpr;
using AstExprPtr = std::shared_ptr<const AstExpr>;

struct AstCol {
  std::string name;
};
struct AstLit {
  LogicalType type;
  LiteralValue value;  // dates keep ISO text
};
struct AstArith {
  ArithOp op;
  AstExprPtr left, right;
};
struct AstCompare {
  CompareOp op;
  AstExprPtr left, right;
};
struct AstLogical {
  LogicalOp op;
  AstExprPtr left, right;
};
struct AstNot {
  AstExprPtr input;
};
struct AstBetween {
  AstExprPtr input, lo, hi;
};
struct AstCase {
  struct Branch {
    AstExprPtr when, then;
  };
  std::vector<Branch> branches;
  AstExprPtr else_value;
};
struct AstLike {
  AstExprPtr input;
  std::string pattern;
};
struct AstPredict {
  std::string model;
  std::vector<AstExprPtr> args;
};
struct AstAggCall {
  AggFn fn;
  AstExprPtr arg;   // null for COUNT(*)
  bool star = false;
};

struct AstExpr {
  size_t offset;
  std::variant<AstCol, AstLit, AstArith, AstCompare, AstLogical, AstNot, AstBetween, AstCase,
               AstLike, AstPredict, AstAggCall>
      node;
};

struct SelectItem {
  AstExprPtr expr;
  std::optional<std::string> alias;
};

struct TableRef {
  std::string name;
  size_t offset = 0;
};

struct Ast {
  std::vector<SelectItem> select;
  TableRef from;
  std::optional<TableRef> comma_table;        // FROM t1, t2
  std::optional<TableRef> join_table;         // JOIN t2 ON ...
  AstExprPtr join_on;                         // set with join_table
  AstExprPtr where;                           // may be null
  std::vector<std::pair<std::string, size_t>> group_by;  // (column, offset)
  std::optional<int64_t> limit;
};

Ast parse(const std::string& sql);

// Canonical SQL rendering; parse(print(ast)) reproduces the Ast.
std::string print(const Ast& ast);

// Structural equality ignoring source offsets.
bool ast_equal(const Ast& a, const Ast& b);

// Deterministic physical plan: per-table filters pushed below the join, the
// first cross-table equality becomes the join keys, residual conjuncts filter
// above the join, then aggregate/project and limit.
PlanPtr plan(const Ast& ast, const Catalog& catalog);

PlanPtr parse_and_plan(const std::string& sql, const Catalog& catalog);

}  // namespace tensql::sql

#include <charconv>
#include <sstream>

#include "tensql/sql.hpp"
#include "tensql/strings.hpp"

namespace tensql::sql {

namespace {

template <typename T>
AstExprPtr node(size_t offset, T&& n) {
  return std::make_shared<const AstExpr>(AstExpr{offset, std::forward<T>(n)});
}

bool is_keyword(const Token& t, std::string_view kw) {
  return t.kind == TokenKind::Ident && iequals(t.text, kw);
}

std::optional<AggFn> agg_fn_from_name(std::string_view name) {
  if (iequals(name, "sum")) return AggFn::Sum;
  if (iequals(name, "count")) return AggFn::Count;
  if (iequals(name, "avg")) return AggFn::Avg;
  if (iequals(name, "min")) return AggFn::Min;
  if (iequals(name, "max")) return AggFn::Max;
  return std::nullopt;
}

const char* kReserved[] = {"select", "from",    "where", "group", "by",   "limit",
                           "join",   "on",      "and",   "or",    "not",  "between",
                           "like",   "case",    "when",  "then",  "else", "end",
                           "date",   "as",      "sum",   "count", "avg",  "min",
                           "max",    "predict", "true",  "false"};

bool is_reserved(std::string_view word) {
  for (const char* kw : kReserved) {
    if (iequals(word, kw)) return true;
  }
  return false;
}

class Parser {
 public:
  explicit Parser(const std::string& sql) : tokens_(tokenize(sql)) {}

  Ast parse_select() {
    expect_keyword("SELECT");
    Ast ast;
    ast.select.push_back(parse_select_item());
    while (accept(TokenKind::Comma)) ast.select.push_back(parse_select_item());

    expect_keyword("FROM");
    ast.from = parse_table_ref();
    if (accept(TokenKind::Comma)) {
      ast.comma_table = parse_table_ref();
    } else if (accept_keyword("JOIN")) {
      ast.join_table = parse_table_ref();
      expect_keyword("ON");
      ast.join_on = parse_expr();
    }
    if (accept_keyword("WHERE")) ast.where = parse_expr();
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      ast.group_by.emplace_back(expect_ident("column name"), prev_offset_);
      while (accept(TokenKind::Comma)) {
        ast.group_by.emplace_back(expect_ident("column name"), prev_offset_);
      }
    }
    if (accept_keyword("LIMIT")) {
      const Token& t = expect(TokenKind::Int, "row count");
      ast.limit = std::stoll(t.text);
    }
    if (!at(TokenKind::End)) {
      throw SqlError("unexpected trailing input (expected end of statement), got '" +
                         peek().text + "'",
                     peek().offset);
    }
    return ast;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  bool at(TokenKind k) const { return peek().kind == k; }

  const Token& advance() {
    const Token& t = tokens_[pos_];
    prev_offset_ = t.offset;
    if (t.kind != TokenKind::End) ++pos_;
    return t;
  }

  bool accept(TokenKind k) {
    if (!at(k)) return false;
    advance();
    return true;
  }

  bool accept_keyword(std::string_view kw) {
    if (!is_keyword(peek(), kw)) return false;
    advance();
    return true;
  }

  const Token& expect(TokenKind k, const char* what) {
    if (!at(k)) {
      throw SqlError(std::string("expected ") + what + ", got '" +
                         (peek().kind == TokenKind::End ? "end of input" : peek().text) + "'",
                     peek().offset);
    }
    return advance();
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) {
      throw SqlError("expected " + std::string(kw) + ", got '" +
                         (peek().kind == TokenKind::End ? "end of input" : peek().text) + "'",
                     peek().offset);
    }
  }

  std::string expect_ident(const char* what) {
    const Token& t = expect(TokenKind::Ident, what);
    if (is_reserved(t.text)) {
      throw SqlError("expected " + std::string(what) + ", got keyword '" + t.text + "'",
                     t.offset);
    }
    return t.text;
  }

  TableRef parse_table_ref() {
    size_t off = peek().offset;
    return {expect_ident("table name"), off};
  }

  SelectItem parse_select_item() {
    SelectItem item;
    item.expr = parse_expr();
    if (accept_keyword("AS")) item.alias = expect_ident("alias");
    return item;
  }

  AstExprPtr parse_expr() { return parse_or(); }

  AstExprPtr parse_or() {
    AstExprPtr left = parse_and();
    while (is_keyword(peek(), "OR")) {
      size_t off = advance().offset;
      left = node(off, AstLogical{LogicalOp::OR, left, parse_and()});
    }
    return left;
  }

  AstExprPtr parse_and() {
    AstExprPtr left = parse_not();
    while (is_keyword(peek(), "AND")) {
      size_t off = advance().offset;
      left = node(off, AstLogical{LogicalOp::AND, left, parse_not()});
    }
    return left;
  }

  AstExprPtr parse_not() {
    if (is_keyword(peek(), "NOT")) {
      size_t off = advance().offset;
      return node(off, AstNot{parse_not()});
    }
    return parse_predicate();
  }

  AstExprPtr parse_predicate() {
    AstExprPtr left = parse_additive();
    const Token& t = peek();
    auto cmp = [&](CompareOp op) {
      size_t off = advance().offset;
      return node(off, AstCompare{op, left, parse_additive()});
    };
    switch (t.kind) {
      case TokenKind::Eq: return cmp(CompareOp::EQ);
      case TokenKind::Ne: return cmp(CompareOp::NE);
      case TokenKind::Lt: return cmp(CompareOp::LT);
      case TokenKind::Le: return cmp(CompareOp::LE);
      case TokenKind::Gt: return cmp(CompareOp::GT);
      case TokenKind::Ge: return cmp(CompareOp::GE);
      default: break;
    }
    if (is_keyword(t, "BETWEEN")) {
      size_t off = advance().offset;
      AstExprPtr lo = parse_additive();
      expect_keyword("AND");
      AstExprPtr hi = parse_additive();
      return node(off, AstBetween{left, lo, hi});
    }
    if (is_keyword(t, "LIKE")) {
      size_t off = advance().offset;
      const Token& pat = expect(TokenKind::String, "pattern string");
      return node(off, AstLike{left, pat.text});
    }
    return left;
  }

  AstExprPtr parse_additive() {
    AstExprPtr left = parse_multiplicative();
    while (at(TokenKind::Plus) || at(TokenKind::Minus)) {
      ArithOp op = at(TokenKind::Plus) ? ArithOp::ADD : ArithOp::SUB;
      size_t off = advance().offset;
      left = node(off, AstArith{op, left, parse_multiplicative()});
    }
    return left;
  }

  AstExprPtr parse_multiplicative() {
    AstExprPtr left = parse_unary();
    while (at(TokenKind::Star) || at(TokenKind::Slash)) {
      ArithOp op = at(TokenKind::Star) ? ArithOp::MUL : ArithOp::DIV;
      size_t off = advance().offset;
      left = node(off, AstArith{op, left, parse_unary()});
    }
    return left;
  }

  AstExprPtr parse_unary() {
    if (at(TokenKind::Minus)) {
      size_t off = advance().offset;
      if (at(TokenKind::Int)) {
        const Token& t = advance();
        return node(off, AstLit{LogicalType::Int64, -std::stoll(t.text)});
      }
      if (at(TokenKind::Float)) {
        const Token& t = advance();
        return node(off, AstLit{LogicalType::Float64, -std::stod(t.text)});
      }
      throw SqlError("expected a numeric literal after unary '-'", peek().offset);
    }
    return parse_primary();
  }

  AstExprPtr parse_primary() {
    const Token& t = peek();
    size_t off = t.offset;
    switch (t.kind) {
      case TokenKind::Int: {
        advance();
        return node(off, AstLit{LogicalType::Int64, static_cast<int64_t>(std::stoll(t.text))});
      }
      case TokenKind::Float: {
        advance();
        return node(off, AstLit{LogicalType::Float64, std::stod(t.text)});
      }
      case TokenKind::String: {
        advance();
        return node(off, AstLit{LogicalType::Utf8, t.text});
      }
      case TokenKind::LParen: {
        advance();
        AstExprPtr e = parse_expr();
        expect(TokenKind::RParen, "')'");
        return e;
      }
      case TokenKind::Ident: break;
      default:
        throw SqlError("expected an expression (literal, column, function call, CASE, or "
                       "parenthesized expression), got '" +
                           (t.kind == TokenKind::End ? "end of input" : t.text) + "'",
                       off);
    }

    if (accept_keyword("TRUE")) return node(off, AstLit{LogicalType::Bool, true});
    if (accept_keyword("FALSE")) return node(off, AstLit{LogicalType::Bool, false});
    if (accept_keyword("DATE")) {
      const Token& iso = expect(TokenKind::String, "date string");
      try {
        encode_date(iso.text);  // malformed dates fail at parse time
      } catch (const EncodingError& e) {
        throw SqlError(e.what(), iso.offset);
      }
      return node(off, AstLit{LogicalType::Date, iso.text});
    }
    if (accept_keyword("CASE")) return parse_case(off);
    if (is_keyword(t, "PREDICT")) {
      advance();
      expect(TokenKind::LParen, "'('");
      std::string model = expect_ident("model name");
      std::vector<AstExprPtr> args;
      while (accept(TokenKind::Comma)) args.push_back(parse_expr());
      expect(TokenKind::RParen, "')'");
      return node(off, AstPredict{std::move(model), std::move(args)});
    }
    if (auto fn = agg_fn_from_name(t.text)) {
      advance();
      expect(TokenKind::LParen, "'('");
      if (*fn == AggFn::Count && accept(TokenKind::Star)) {
        expect(TokenKind::RParen, "')'");
        return node(off, AstAggCall{AggFn::Count, nullptr, true});
      }
      AstExprPtr arg = parse_expr();
      expect(TokenKind::RParen, "')'");
      return node(off, AstAggCall{*fn, arg, false});
    }
    return node(off, AstCol{expect_ident("column name")});
  }

  AstExprPtr parse_case(size_t off) {
    AstCase c;
    expect_keyword("WHEN");
    do {
      AstExprPtr when = parse_expr();
      expect_keyword("THEN");
      c.branches.push_back({when, parse_expr()});
    } while (accept_keyword("WHEN"));
    if (!accept_keyword("ELSE")) {
      throw SqlError("CASE requires an ELSE branch (NULL semantics are unsupported)",
                     peek().offset);
    }
    c.else_value = parse_expr();
    expect_keyword("END");
    return node(off, std::move(c));
  }

  std::vector<Token> tokens_;
  size_t pos_ = 0;
  size_t prev_offset_ = 0;
};

}  // namespace

Ast parse(const std::string& sql) { return Parser(sql).parse_select(); }

namespace {

void print_expr(std::ostream& os, const AstExprPtr& e);

void print_literal(std::ostream& os, const AstLit& lit) {
  switch (lit.type) {
    case LogicalType::Bool: os << (std::get<bool>(lit.value) ? "TRUE" : "FALSE"); break;
    case LogicalType::Int64: os << std::get<int64_t>(lit.value); break;
    case LogicalType::Float64: {
      char buf[40];
      double v = std::get<double>(lit.value);
      // Shortest round-trip rendering; force a trailing ".0" onto integral
      // values so the token re-lexes as a Float.
      auto r = std::to_chars(buf, buf + sizeof(buf), v);
      std::string s(buf, r.ptr);
      if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
          s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
        s += ".0";
      }
      os << s;
      break;
    }
    case LogicalType::Utf8: os << '\'' << std::get<std::string>(lit.value) << '\''; break;
    case LogicalType::Date: os << "DATE '" << std::get<std::string>(lit.value) << '\''; break;
  }
}

const char* compare_op_sql(CompareOp op) {
  switch (op) {
    case CompareOp::EQ: return "=";
    case CompareOp::NE: return "<>";
    case CompareOp::LT: return "<";
    case CompareOp::LE: return "<=";
    case CompareOp::GT: return ">";
    case CompareOp::GE: return ">=";
  }
  return "?";
}

const char* arith_op_sql(ArithOp op) {
  switch (op) {
    case ArithOp::ADD: return "+";
    case ArithOp::SUB: return "-";
    case ArithOp::MUL: return "*";
    case ArithOp::DIV: return "/";
  }
  return "?";
}

void print_expr(std::ostream& os, const AstExprPtr& e) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, AstCol>) {
          os << x.name;
        } else if constexpr (std::is_same_v<T, AstLit>) {
          print_literal(os, x);
        } else if constexpr (std::is_same_v<T, AstArith>) {
          os << '(';
          print_expr(os, x.left);
          os << ' ' << arith_op_sql(x.op) << ' ';
          print_expr(os, x.right);
          os << ')';
        } else if constexpr (std::is_same_v<T, AstCompare>) {
          os << '(';
          print_expr(os, x.left);
          os << ' ' << compare_op_sql(x.op) << ' ';
          print_expr(os, x.right);
          os << ')';
        } else if constexpr (std::is_same_v<T, AstLogical>) {
          os << '(';
          print_expr(os, x.left);
          os << (x.op == LogicalOp::AND ? " AND " : " OR ");
          print_expr(os, x.right);
          os << ')';
        } else if constexpr (std::is_same_v<T, AstNot>) {
          os << "(NOT ";
          print_expr(os, x.input);
          os << ')';
        } else if constexpr (std::is_same_v<T, AstBetween>) {
          os << '(';
          print_expr(os, x.input);
          os << " BETWEEN ";
          print_expr(os, x.lo);
          os << " AND ";
          print_expr(os, x.hi);
          os << ')';
        } else if constexpr (std::is_same_v<T, AstCase>) {
          os << "CASE";
          for (const auto& br : x.branches) {
            os << " WHEN ";
            print_expr(os, br.when);
            os << " THEN ";
            print_expr(os, br.then);
          }
          os << " ELSE ";
          print_expr(os, x.else_value);
          os << " END";
        } else if constexpr (std::is_same_v<T, AstLike>) {
          os << '(';
          print_expr(os, x.input);
          os << " LIKE '" << x.pattern << "')";
        } else if constexpr (std::is_same_v<T, AstPredict>) {
          os << "PREDICT(" << x.model;
          for (const auto& a : x.args) {
            os << ", ";
            print_expr(os, a);
          }
          os << ')';
        } else if constexpr (std::is_same_v<T, AstAggCall>) {
          os << to_lower(agg_fn_name(x.fn)) << '(';
          if (x.star) {
            os << '*';
          } else {
            print_expr(os, x.arg);
          }
          os << ')';
        }
      },
      e->node);
}

}  // namespace

std::string print(const Ast& ast) {
  std::ostringstream os;
  os << "SELECT ";
  for (size_t i = 0; i < ast.select.size(); ++i) {
    if (i) os << ", ";
    print_expr(os, ast.select[i].expr);
    if (ast.select[i].alias) os << " AS " << *ast.select[i].alias;
  }
  os << " FROM " << ast.from.name;
  if (ast.comma_table) os << ", " << ast.comma_table->name;
  if (ast.join_table) {
    os << " JOIN " << ast.join_table->name << " ON ";
    print_expr(os, ast.join_on);
  }
  if (ast.where) {
    os << " WHERE ";
    print_expr(os, ast.where);
  }
  if (!ast.group_by.empty()) {
    os << " GROUP BY ";
    for (size_t i = 0; i < ast.group_by.size(); ++i) {
      if (i) os << ", ";
      os << ast.group_by[i].first;
    }
  }
  if (ast.limit) os << " LIMIT " << *ast.limit;
  return os.str();
}

namespace {

bool expr_eq(const AstExprPtr& a, const AstExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, AstCol>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, AstLit>) {
          return x.type == y.type && x.value == y.value;
        } else if constexpr (std::is_same_v<T, AstArith>) {
          return x.op == y.op && expr_eq(x.left, y.left) && expr_eq(x.right, y.right);
        } else if constexpr (std::is_same_v<T, AstCompare>) {
          return x.op == y.op && expr_eq(x.left, y.left) && expr_eq(x.right, y.right);
        } else if constexpr (std::is_same_v<T, AstLogical>) {
          return x.op == y.op && expr_eq(x.left, y.left) && expr_eq(x.right, y.right);
        } else if constexpr (std::is_same_v<T, AstNot>) {
          return expr_eq(x.input, y.input);
        } else if constexpr (std::is_same_v<T, AstBetween>) {
          return expr_eq(x.input, y.input) && expr_eq(x.lo, y.lo) && expr_eq(x.hi, y.hi);
        } else if constexpr (std::is_same_v<T, AstCase>) {
          if (x.branches.size() != y.branches.size()) return false;
          for (size_t i = 0; i < x.branches.size(); ++i) {
            if (!expr_eq(x.branches[i].when, y.branches[i].when) ||
                !expr_eq(x.branches[i].then, y.branches[i].then)) {
              return false;
            }
          }
          return expr_eq(x.else_value, y.else_value);
        } else if constexpr (std::is_same_v<T, AstLike>) {
          return x.pattern == y.pattern && expr_eq(x.input, y.input);
        } else if constexpr (std::is_same_v<T, AstPredict>) {
          if (x.model != y.model || x.args.size() != y.args.size()) return false;
          for (size_t i = 0; i < x.args.size(); ++i) {
            if (!expr_eq(x.args[i], y.args[i])) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, AstAggCall>) {
          return x.fn == y.fn && x.star == y.star && expr_eq(x.arg, y.arg);
        } else {
          return false;
        }
      },
      a->node);
}

}  // namespace

bool ast_equal(const Ast& a, const Ast& b) {
  if (a.select.size() != b.select.size() || a.from.name != b.from.name) return false;
  for (size_t i = 0; i < a.select.size(); ++i) {
    if (a.select[i].alias != b.select[i].alias ||
        !expr_eq(a.select[i].expr, b.select[i].expr)) {
      return false;
    }
  }
  auto opt_name = [](const std::optional<TableRef>& t) {
    return t ? std::optional<std::string>(t->name) : std::nullopt;
  };
  if (opt_name(a.comma_table) != opt_name(b.comma_table)) return false;
  if (opt_name(a.join_table) != opt_name(b.join_table)) return false;
  if (!expr_eq(a.join_on, b.join_on) || !expr_eq(a.where, b.where)) return false;
  if (a.group_by.size() != b.group_by.size()) return false;
  for (size_t i = 0; i < a.group_by.size(); ++i) {
    if (a.group_by[i].first != b.group_by[i].first) return false;
  }
  return a.limit == b.limit;
}

}  // namespace tensql::sql

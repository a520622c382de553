#include <cctype>

#include "tensql/sql.hpp"

namespace tensql::sql {

std::vector<Token> tokenize(const std::string& sql) {
  std::vector<Token> out;
  size_t i = 0;
  auto push = [&](TokenKind k, std::string text, size_t at) {
    out.push_back({k, std::move(text), at});
  };
  while (i < sql.size()) {
    char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < sql.size() &&
             (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_')) {
        ++j;
      }
      push(TokenKind::Ident, sql.substr(i, j - i), start);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      bool is_float = false;
      while (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      if (j < sql.size() && sql[j] == '.') {
        is_float = true;
        ++j;
        while (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      }
      if (j < sql.size() && (sql[j] == 'e' || sql[j] == 'E')) {
        size_t k = j + 1;
        if (k < sql.size() && (sql[k] == '+' || sql[k] == '-')) ++k;
        if (k < sql.size() && std::isdigit(static_cast<unsigned char>(sql[k]))) {
          is_float = true;
          j = k;
          while (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
        }
      }
      push(is_float ? TokenKind::Float : TokenKind::Int, sql.substr(i, j - i), start);
      i = j;
      continue;
    }
    if (c == '\'') {
      size_t j = i + 1;
      while (j < sql.size() && sql[j] != '\'') ++j;
      if (j >= sql.size()) throw SqlError("unterminated string literal", start);
      push(TokenKind::String, sql.substr(i + 1, j - i - 1), start);
      i = j + 1;
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < sql.size() && sql[i + 1] == b;
    };
    if (two('<', '=')) {
      push(TokenKind::Le, "<=", start);
      i += 2;
    } else if (two('>', '=')) {
      push(TokenKind::Ge, ">=", start);
      i += 2;
    } else if (two('<', '>')) {
      push(TokenKind::Ne, "<>", start);
      i += 2;
    } else if (two('!', '=')) {
      push(TokenKind::Ne, "!=", start);
      i += 2;
    } else {
      TokenKind k;
      switch (c) {
        case ',': k = TokenKind::Comma; break;
        case '(': k = TokenKind::LParen; break;
        case ')': k = TokenKind::RParen; break;
        case '*': k = TokenKind::Star; break;
        case '+': k = TokenKind::Plus; break;
        case '-': k = TokenKind::Minus; break;
        case '/': k = TokenKind::Slash; break;
        case '=': k = TokenKind::Eq; break;
        case '<': k = TokenKind::Lt; break;
        case '>': k = TokenKind::Gt; break;
        default:
          throw SqlError(std::string("unexpected character '") + c + "'", start);
      }
      push(k, sql.substr(i, 1), start);
      ++i;
    }
  }
  out.push_back({TokenKind::End, "", sql.size()});
  return out;
}

}  // namespace tensql::sql

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tensql/tensor.hpp"

namespace tensql {

enum class LogicalType : uint8_t { Int64, Float64, Date, Utf8, Bool };

const char* logical_type_name(LogicalType t);
std::optional<LogicalType> logical_type_from_name(std::string_view name);

// Physical mapping: Int64/Float64/Bool -> (n,1) of the same dtype; Date ->
// (n,1) Int64 epoch nanoseconds at UTC midnight; Utf8 -> (n,m) Int32 of UTF-8
// byte values right-padded with zeros, m = max byte length (>= 1).
DType physical_dtype(LogicalType t);

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A typed cell of a decoded row. Dates are carried as ISO "YYYY-MM-DD" text
// in the string alternative alongside Utf8.
using Cell = std::variant<bool, int64_t, double, std::string>;
using Row = std::vector<Cell>;

struct EncodedColumn {
  std::string name;
  LogicalType logical;
  Tensor tensor;

  int64_t width() const { return tensor.cols(); }
};

class EncodedTable {
 public:
  EncodedTable() = default;
  EncodedTable(std::vector<EncodedColumn> columns);

  int64_t row_count() const { return rows_; }
  const std::vector<EncodedColumn>& columns() const { return columns_; }
  const EncodedColumn& column(std::string_view name) const;  // case-insensitive
  const EncodedColumn* find_column(std::string_view name) const;

 private:
  std::vector<EncodedColumn> columns_;
  int64_t rows_ = 0;
};

struct ColumnSpec {
  std::string name;
  LogicalType type;
};

using TableSchema = std::vector<ColumnSpec>;

// Days since 1970-01-01 of a proleptic-Gregorian civil date.
int64_t days_from_civil(int year, unsigned month, unsigned day);

// "YYYY-MM-DD" -> epoch nanoseconds at UTC midnight. Rejects malformed text,
// invalid calendar dates, and dates outside the Int64 nanosecond range.
int64_t encode_date(std::string_view iso);
std::string decode_date(int64_t epoch_ns);

Tensor encode_string_rows(const std::vector<std::string>& values);
std::string decode_string_row(const Tensor& t, int64_t row);

EncodedColumn encode_string_column(std::string name, const std::vector<std::string>& values);
EncodedColumn encode_date_column(std::string name, const std::vector<std::string>& iso_dates);

EncodedTable encode_table(const TableSchema& schema, const std::vector<Row>& rows);
std::vector<Row> decode_table(const EncodedTable& table);

std::string cell_to_text(const Cell& cell, LogicalType type);

// Rowwise byte comparison of two padded string tensors; rows beyond either
// width compare against implicit zero padding. Returns <0, 0, >0.
int compare_string_rows(const Tensor& a, int64_t row_a, const Tensor& b, int64_t row_b);

TableSchema schema_from_json_text(const std::string& text);
std::string schema_to_json_text(const TableSchema& schema);

// CSV: UTF-8, first line is the header (names must match the schema order,
// case-insensitively), single-character delimiter, '\n' newlines, no quoting
// or escaping. Empty fields are errors (no NULL support).
EncodedTable load_csv(const std::string& path, const TableSchema& schema, char delimiter = '|');
EncodedTable parse_csv_text(const std::string& text, const TableSchema& schema, char delimiter,
                            const std::string& origin);

// Sidecar-driven load: reads <dir>/<table>.csv and <dir>/<table>.schema.json.
EncodedTable load_table_dir(const std::string& dir, const std::string& table, char delimiter = '|');

}  // namespace tensql

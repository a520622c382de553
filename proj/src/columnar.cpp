#include "tensql/columnar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tensql/strings.hpp"

namespace tensql {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw EncodingError(msg); }

constexpr int64_t kNsPerDay = 86'400'000'000'000;

// Validates that bytes form a complete UTF-8 sequence with no embedded NUL.
bool valid_utf8(std::string_view s) {
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == 0) return false;
    size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      if (c < 0xC2) return false;  // overlong
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      if (c > 0xF4) return false;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (size_t j = 1; j < len; ++j) {
      if ((static_cast<unsigned char>(s[i + j]) & 0xC0) != 0x80) return false;
    }
    i += len;
  }
  return true;
}

}  // namespace

const char* logical_type_name(LogicalType t) {
  switch (t) {
    case LogicalType::Int64: return "int64";
    case LogicalType::Float64: return "float64";
    case LogicalType::Date: return "date";
    case LogicalType::Utf8: return "utf8";
    case LogicalType::Bool: return "bool";
  }
  return "?";
}

std::optional<LogicalType> logical_type_from_name(std::string_view name) {
  if (name == "int64") return LogicalType::Int64;
  if (name == "float64") return LogicalType::Float64;
  if (name == "date") return LogicalType::Date;
  if (name == "utf8") return LogicalType::Utf8;
  if (name == "bool") return LogicalType::Bool;
  return std::nullopt;
}

DType physical_dtype(LogicalType t) {
  switch (t) {
    case LogicalType::Int64:
    case LogicalType::Date: return DType::Int64;
    case LogicalType::Float64: return DType::Float64;
    case LogicalType::Utf8: return DType::Int32;
    case LogicalType::Bool: return DType::Bool;
  }
  return DType::Int64;
}

EncodedTable::EncodedTable(std::vector<EncodedColumn> columns) : columns_(std::move(columns)) {
  if (!columns_.empty()) rows_ = columns_[0].tensor.rows();
  for (const auto& c : columns_) {
    if (c.tensor.rows() != rows_) {
      fail("table: column '" + c.name + "' has " + std::to_string(c.tensor.rows()) +
           " rows, expected " + std::to_string(rows_));
    }
    if (c.tensor.dtype() != physical_dtype(c.logical)) {
      fail("table: column '" + c.name + "' tensor dtype does not match logical type");
    }
  }
  for (size_t i = 0; i < columns_.size(); ++i) {
    for (size_t j = i + 1; j < columns_.size(); ++j) {
      if (iequals(columns_[i].name, columns_[j].name)) {
        fail("table: duplicate column name '" + columns_[j].name + "'");
      }
    }
  }
}

const EncodedColumn* EncodedTable::find_column(std::string_view name) const {
  for (const auto& c : columns_) {
    if (iequals(c.name, name)) return &c;
  }
  return nullptr;
}

const EncodedColumn& EncodedTable::column(std::string_view name) const {
  const EncodedColumn* c = find_column(name);
  if (!c) fail("table: no column named '" + std::string(name) + "'");
  return *c;
}

int64_t days_from_civil(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) {
    fail("date: invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
         "-" + std::to_string(day));
  }
  return sys_days{ymd}.time_since_epoch().count();
}

int64_t encode_date(std::string_view iso) {
  auto bad = [&]() -> int64_t {
    fail("date: malformed date '" + std::string(iso) + "' (expected YYYY-MM-DD)");
  };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return bad();
  auto parse_uint = [&](std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  };
  int y, m, d;
  if (!parse_uint(iso.substr(0, 4), y) || !parse_uint(iso.substr(5, 2), m) ||
      !parse_uint(iso.substr(8, 2), d)) {
    return bad();
  }
  int64_t days = days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
  int64_t ns;
  if (__builtin_mul_overflow(days, kNsPerDay, &ns)) {
    fail("date: '" + std::string(iso) + "' outside the Int64 nanosecond range");
  }
  return ns;
}

std::string decode_date(int64_t epoch_ns) {
  using namespace std::chrono;
  if (epoch_ns % kNsPerDay != 0) fail("date: nanoseconds are not a whole UTC day");
  sys_days sd{days{epoch_ns / kNsPerDay}};
  year_month_day ymd{sd};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Tensor encode_string_rows(const std::vector<std::string>& values) {
  int64_t m = 1;
  for (const auto& v : values) {
    if (!valid_utf8(v)) fail("utf8: invalid UTF-8 value");
    m = std::max<int64_t>(m, static_cast<int64_t>(v.size()));
  }
  std::vector<int32_t> data(values.size() * static_cast<size_t>(m), 0);
  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t j = 0; j < values[i].size(); ++j) {
      data[i * static_cast<size_t>(m) + j] =
          static_cast<int32_t>(static_cast<unsigned char>(values[i][j]));
    }
  }
  return Tensor::from_matrix(static_cast<int64_t>(values.size()), m, std::move(data));
}

std::string decode_string_row(const Tensor& t, int64_t row) {
  auto data = t.data<int32_t>();
  int64_t m = t.cols();
  std::string out;
  for (int64_t j = 0; j < m; ++j) {
    int32_t b = data[static_cast<size_t>(row * m + j)];
    if (b == 0) break;
    out.push_back(static_cast<char>(static_cast<unsigned char>(b)));
  }
  return out;
}

EncodedColumn encode_string_column(std::string name, const std::vector<std::string>& values) {
  return EncodedColumn{std::move(name), LogicalType::Utf8, encode_string_rows(values)};
}

EncodedColumn encode_date_column(std::string name, const std::vector<std::string>& iso_dates) {
  std::vector<int64_t> ns(iso_dates.size());
  for (size_t i = 0; i < iso_dates.size(); ++i) ns[i] = encode_date(iso_dates[i]);
  return EncodedColumn{std::move(name), LogicalType::Date, Tensor::from_vector(std::move(ns))};
}

namespace {

template <typename T>
const T* cell_as(const Cell& cell) {
  return std::get_if<T>(&cell);
}

[[noreturn]] void cell_type_error(size_t row, const std::string& col, LogicalType want) {
  fail("encode: row " + std::to_string(row) + ", column '" + col + "': value does not match " +
       logical_type_name(want));
}

}  // namespace

EncodedTable encode_table(const TableSchema& schema, const std::vector<Row>& rows) {
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != schema.size()) {
      fail("encode: row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
           " fields, schema has " + std::to_string(schema.size()));
    }
  }
  std::vector<EncodedColumn> cols;
  cols.reserve(schema.size());
  for (size_t c = 0; c < schema.size(); ++c) {
    const auto& spec = schema[c];
    switch (spec.type) {
      case LogicalType::Int64: {
        std::vector<int64_t> v(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
          const int64_t* p = cell_as<int64_t>(rows[r][c]);
          if (!p) cell_type_error(r, spec.name, spec.type);
          v[r] = *p;
        }
        cols.push_back({spec.name, spec.type, Tensor::from_vector(std::move(v))});
        break;
      }
      case LogicalType::Float64: {
        std::vector<double> v(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
          const double* p = cell_as<double>(rows[r][c]);
          if (!p) cell_type_error(r, spec.name, spec.type);
          v[r] = *p;
        }
        cols.push_back({spec.name, spec.type, Tensor::from_vector(std::move(v))});
        break;
      }
      case LogicalType::Bool: {
        std::vector<uint8_t> v(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
          const bool* p = cell_as<bool>(rows[r][c]);
          if (!p) cell_type_error(r, spec.name, spec.type);
          v[r] = *p ? 1 : 0;
        }
        cols.push_back({spec.name, spec.type, Tensor::from_vector(std::move(v))});
        break;
      }
      case LogicalType::Date: {
        std::vector<int64_t> v(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
          const std::string* p = cell_as<std::string>(rows[r][c]);
          if (!p) cell_type_error(r, spec.name, spec.type);
          v[r] = encode_date(*p);
        }
        cols.push_back({spec.name, spec.type, Tensor::from_vector(std::move(v))});
        break;
      }
      case LogicalType::Utf8: {
        std::vector<std::string> v(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
          const std::string* p = cell_as<std::string>(rows[r][c]);
          if (!p) cell_type_error(r, spec.name, spec.type);
          v[r] = *p;
        }
        cols.push_back(encode_string_column(spec.name, v));
        break;
      }
    }
  }
  EncodedTable out(std::move(cols));
  if (out.columns().empty() && !rows.empty()) fail("encode: rows supplied for an empty schema");
  return out;
}

std::vector<Row> decode_table(const EncodedTable& table) {
  std::vector<Row> rows(static_cast<size_t>(table.row_count()));
  for (auto& r : rows) r.reserve(table.columns().size());
  for (const auto& col : table.columns()) {
    switch (col.logical) {
      case LogicalType::Int64: {
        auto v = col.tensor.data<int64_t>();
        for (size_t r = 0; r < rows.size(); ++r) rows[r].emplace_back(v[r]);
        break;
      }
      case LogicalType::Float64: {
        auto v = col.tensor.data<double>();
        for (size_t r = 0; r < rows.size(); ++r) rows[r].emplace_back(v[r]);
        break;
      }
      case LogicalType::Bool: {
        auto v = col.tensor.data<uint8_t>();
        for (size_t r = 0; r < rows.size(); ++r) rows[r].emplace_back(v[r] != 0);
        break;
      }
      case LogicalType::Date: {
        auto v = col.tensor.data<int64_t>();
        for (size_t r = 0; r < rows.size(); ++r) rows[r].emplace_back(decode_date(v[r]));
        break;
      }
      case LogicalType::Utf8: {
        for (size_t r = 0; r < rows.size(); ++r) {
          rows[r].emplace_back(decode_string_row(col.tensor, static_cast<int64_t>(r)));
        }
        break;
      }
    }
  }
  return rows;
}

std::string cell_to_text(const Cell& cell, LogicalType type) {
  switch (type) {
    case LogicalType::Int64: return std::to_string(std::get<int64_t>(cell));
    case LogicalType::Bool: return std::get<bool>(cell) ? "true" : "false";
    case LogicalType::Date:
    case LogicalType::Utf8: return std::get<std::string>(cell);
    case LogicalType::Float64: {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof(buf), std::get<double>(cell));
      return std::string(buf, r.ptr);
    }
  }
  return "";
}

int compare_string_rows(const Tensor& a, int64_t row_a, const Tensor& b, int64_t row_b) {
  auto av = a.data<int32_t>();
  auto bv = b.data<int32_t>();
  int64_t m = std::max(a.cols(), b.cols());
  for (int64_t j = 0; j < m; ++j) {
    int32_t x = j < a.cols() ? av[static_cast<size_t>(row_a * a.cols() + j)] : 0;
    int32_t y = j < b.cols() ? bv[static_cast<size_t>(row_b * b.cols() + j)] : 0;
    if (x != y) return x < y ? -1 : 1;
  }
  return 0;
}

TableSchema schema_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("schema: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array()) {
    fail("schema: expected {\"columns\": [...]}");
  }
  TableSchema schema;
  for (const auto& c : j["columns"]) {
    if (!c.is_object() || !c.contains("name") || !c.contains("type")) {
      fail("schema: each column needs \"name\" and \"type\"");
    }
    auto type = logical_type_from_name(c["type"].get<std::string>());
    if (!type) fail("schema: unknown type '" + c["type"].get<std::string>() + "'");
    schema.push_back({c["name"].get<std::string>(), *type});
  }
  return schema;
}

std::string schema_to_json_text(const TableSchema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema) {
    cols.push_back({{"name", c.name}, {"type", logical_type_name(c.type)}});
  }
  return nlohmann::json{{"columns", cols}}.dump(2);
}

namespace {

struct CsvColumnBuilder {
  LogicalType type;
  std::vector<int64_t> i64;
  std::vector<double> f64;
  std::vector<uint8_t> b8;
  std::vector<std::string> text;

  void parse(std::string_view field, const std::string& origin, size_t line, size_t col,
             const std::string& name) {
    auto err = [&](const std::string& what) {
      fail(origin + ":" + std::to_string(line) + ": column '" + name + "' (field " +
           std::to_string(col + 1) + "): " + what);
    };
    if (field.empty() && type != LogicalType::Utf8) {
      err("empty field (NULLs are not supported)");
    }
    switch (type) {
      case LogicalType::Int64: {
        int64_t v;
        auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || p != field.data() + field.size()) {
          err("cannot parse int64 from '" + std::string(field) + "'");
        }
        i64.push_back(v);
        break;
      }
      case LogicalType::Float64: {
        double v;
        auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || p != field.data() + field.size()) {
          err("cannot parse float64 from '" + std::string(field) + "'");
        }
        f64.push_back(v);
        break;
      }
      case LogicalType::Date: {
        try {
          i64.push_back(encode_date(field));
        } catch (const EncodingError& e) {
          err(e.what());
        }
        break;
      }
      case LogicalType::Bool: {
        if (field == "true" || field == "1") {
          b8.push_back(1);
        } else if (field == "false" || field == "0") {
          b8.push_back(0);
        } else {
          err("cannot parse bool from '" + std::string(field) + "'");
        }
        break;
      }
      case LogicalType::Utf8: {
        if (field.empty()) err("empty field (NULLs are not supported)");
        if (!valid_utf8(field)) err("invalid UTF-8");
        text.emplace_back(field);
        break;
      }
    }
  }

  Tensor finish() {
    switch (type) {
      case LogicalType::Int64:
      case LogicalType::Date: return Tensor::from_vector(std::move(i64));
      case LogicalType::Float64: return Tensor::from_vector(std::move(f64));
      case LogicalType::Bool: return Tensor::from_vector(std::move(b8));
      case LogicalType::Utf8: return encode_string_rows(text);
    }
    fail("csv: bad column type");
  }
};

}  // namespace

EncodedTable parse_csv_text(const std::string& text, const TableSchema& schema, char delimiter,
                            const std::string& origin) {
  if (schema.empty()) fail(origin + ": schema has no columns");
  size_t pos = 0;
  size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    size_t nl = text.find('\n', pos);
    size_t end = nl == std::string::npos ? text.size() : nl;
    line = std::string_view(text).substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    return true;
  };

  std::string_view header;
  if (!next_line(header)) fail(origin + ": missing header line");
  std::vector<std::string_view> fields;
  auto split = [&](std::string_view line) {
    fields.clear();
    size_t start = 0;
    while (true) {
      size_t d = line.find(delimiter, start);
      if (d == std::string_view::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, d - start));
      start = d + 1;
    }
  };
  split(header);
  if (fields.size() != schema.size()) {
    fail(origin + ":1: header has " + std::to_string(fields.size()) + " columns, schema has " +
         std::to_string(schema.size()));
  }
  for (size_t i = 0; i < schema.size(); ++i) {
    if (!iequals(fields[i], schema[i].name)) {
      fail(origin + ":1: header column " + std::to_string(i + 1) + " is '" +
           std::string(fields[i]) + "', schema expects '" + schema[i].name + "'");
    }
  }

  std::vector<CsvColumnBuilder> builders(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) builders[i].type = schema[i].type;

  std::string_view line;
  while (next_line(line)) {
    if (line.empty() && pos >= text.size()) break;  // trailing newline
    split(line);
    if (fields.size() != schema.size()) {
      fail(origin + ":" + std::to_string(line_no) + ": expected " +
           std::to_string(schema.size()) + " fields, got " + std::to_string(fields.size()));
    }
    for (size_t i = 0; i < schema.size(); ++i) {
      builders[i].parse(fields[i], origin, line_no, i, schema[i].name);
    }
  }

  std::vector<EncodedColumn> cols;
  cols.reserve(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) {
    cols.push_back({schema[i].name, schema[i].type, builders[i].finish()});
  }
  return EncodedTable(std::move(cols));
}

EncodedTable load_csv(const std::string& path, const TableSchema& schema, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("csv: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv_text(ss.str(), schema, delimiter, path);
}

EncodedTable load_table_dir(const std::string& dir, const std::string& table, char delimiter) {
  std::string schema_path = dir + "/" + table + ".schema.json";
  std::ifstream sin(schema_path);
  if (!sin) fail("csv: cannot open schema sidecar '" + schema_path + "'");
  std::ostringstream ss;
  ss << sin.rdbuf();
  TableSchema schema = schema_from_json_text(ss.str());
  return load_csv(dir + "/" + table + ".csv", schema, delimiter);
}

}  // namespace tensql

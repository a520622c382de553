#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "support/test_util.hpp"
#include "tensql/columnar.hpp"

using namespace tensql;
using namespace tensql::testing;

namespace {

// Independent date oracle: walk the calendar month by month instead of using
// the closed-form civil-day conversion the implementation relies on.
bool oracle_is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int oracle_month_days(int y, int m) {
  static const int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && oracle_is_leap(y)) return 29;
  return days[m - 1];
}

int64_t oracle_days_since_epoch(int y, int m, int d) {
  int64_t days = 0;
  if (y >= 1970) {
    for (int yy = 1970; yy < y; ++yy) days += oracle_is_leap(yy) ? 366 : 365;
  } else {
    for (int yy = y; yy < 1970; ++yy) days -= oracle_is_leap(yy) ? 366 : 365;
  }
  for (int mm = 1; mm < m; ++mm) days += oracle_month_days(y, mm);
  return days + d - 1;
}

constexpr int64_t kNs = 86'400'000'000'000;

std::vector<int32_t> row_bytes(const Tensor& t, int64_t row) {
  auto d = t.data<int32_t>();
  std::vector<int32_t> out;
  for (int64_t j = 0; j < t.cols(); ++j) out.push_back(d[static_cast<size_t>(row * t.cols() + j)]);
  return out;
}

}  // namespace

TEST_CASE("string encoding: padding rules") {
  auto t = encode_string_rows({"abc", "hello"});
  CHECK(t.cols() == 5);
  CHECK(row_bytes(t, 0) == std::vector<int32_t>{97, 98, 99, 0, 0});
  CHECK(decode_string_row(t, 0) == "abc");
  CHECK(decode_string_row(t, 1) == "hello");

  auto empty = encode_string_rows({""});
  CHECK(empty.cols() == 1);
  CHECK(row_bytes(empty, 0) == std::vector<int32_t>{0});

  auto accent = encode_string_rows({"\xc3\xa9"});  // U+00E9
  CHECK(accent.cols() == 2);
  CHECK(row_bytes(accent, 0) == std::vector<int32_t>{195, 169});

  CHECK_THROWS_AS(encode_string_rows({"\xff\xfe"}), EncodingError);
  CHECK_THROWS_AS(encode_string_rows({std::string("a\0b", 3)}), EncodingError);
}

TEST_CASE("date encoding: anchors and oracle") {
  CHECK(encode_date("1970-01-01") == 0);
  CHECK(encode_date("1970-01-02") == 86'400'000'000'000);
  CHECK(encode_date("1994-01-01") == 757'382'400'000'000'000);  // 8766 days
  CHECK(decode_date(757'382'400'000'000'000) == "1994-01-01");
  CHECK_THROWS_AS(encode_date("1994-1-1"), EncodingError);
  CHECK_THROWS_AS(encode_date("1994-02-30"), EncodingError);
  CHECK_THROWS_AS(encode_date("not-a-date"), EncodingError);
  CHECK_THROWS_AS(encode_date("1500-01-01"), EncodingError);  // below ns range

  Rng rng(5);
  int64_t prev_ns = 0;
  std::string prev_iso;
  for (int t = 0; t < 1000; ++t) {
    int y = 1700 + static_cast<int>(rng() % 500);
    int m = 1 + static_cast<int>(rng() % 12);
    int d = 1 + static_cast<int>(rng() % oracle_month_days(y, m));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    int64_t ns = encode_date(buf);
    REQUIRE(ns == oracle_days_since_epoch(y, m, d) * kNs);
    REQUIRE(decode_date(ns) == buf);
    if (t > 0) {
      // calendar order matches encoded order
      REQUIRE((std::string(buf) < prev_iso) == (ns < prev_ns));
    }
    prev_ns = ns;
    prev_iso = buf;
  }
}

TEST_CASE("encode/decode round-trip") {
  TableSchema schema{{"id", LogicalType::Int64},
                     {"price", LogicalType::Float64},
                     {"day", LogicalType::Date},
                     {"name", LogicalType::Utf8},
                     {"flag", LogicalType::Bool}};
  std::vector<Row> rows{
      {int64_t{42}, 1.5, std::string("1994-01-01"), std::string("widget"), true},
      {int64_t{-7}, 0.01, std::string("1970-01-01"), std::string("héllo"), false},
      {int64_t{0}, -2.25, std::string("2038-12-31"), std::string(""), true},
  };
  auto table = encode_table(schema, rows);
  CHECK(table.row_count() == 3);
  CHECK(decode_table(table) == rows);

  auto empty = encode_table(schema, {});
  CHECK(empty.row_count() == 0);
  CHECK(empty.columns().size() == 5);
  CHECK(decode_table(empty).empty());

  // randomized round-trip over all logical types
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    size_t n = rng() % 100;
    std::vector<Row> rnd(n);
    for (auto& r : rnd) {
      int y = 1900 + static_cast<int>(rng() % 200);
      int m = 1 + static_cast<int>(rng() % 12);
      int d = 1 + static_cast<int>(rng() % 28);
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
      r = Row{static_cast<int64_t>(rng()) >> 1, random_f64(rng, 1, -1e6, 1e6)[0],
              std::string(buf), random_ascii(rng, 10), (rng() & 1) != 0};
    }
    auto enc = encode_table(schema, rnd);
    REQUIRE(decode_table(enc) == rnd);
  }

  CHECK_THROWS_AS(encode_table(schema, {{int64_t{1}}}), EncodingError);       // arity
  CHECK_THROWS_AS(encode_table(schema, {{1.0, 1.0, std::string("1970-01-01"),
                                         std::string("x"), true}}),
                  EncodingError);  // type
}

TEST_CASE("padded byte comparison agrees with string comparison") {
  Rng rng(29);
  std::vector<std::string> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(random_ascii(rng, 8));
  pool.insert(pool.end(), {"", "a", "ab", "é", "éa", "\xc3\xa9z", "zz"});
  auto t = encode_string_rows(pool);
  auto narrow = encode_string_rows({"a", "b", ""});
  for (size_t i = 0; i < pool.size(); ++i) {
    for (size_t j = 0; j < pool.size(); ++j) {
      int byte_cmp = compare_string_rows(t, static_cast<int64_t>(i), t, static_cast<int64_t>(j));
      int str_cmp = pool[i].compare(pool[j]);
      REQUIRE((byte_cmp < 0) == (str_cmp < 0));
      REQUIRE((byte_cmp == 0) == (str_cmp == 0));
    }
  }
  // differing widths: narrower column is logically zero-extended
  CHECK(compare_string_rows(narrow, 0, t, 1) != 0);
  for (size_t j = 0; j < pool.size(); ++j) {
    int c = compare_string_rows(narrow, 2, t, static_cast<int64_t>(j));
    REQUIRE((c == 0) == pool[j].empty());
  }
}

TEST_CASE("csv loading") {
  TableSchema schema{{"l_quantity", LogicalType::Int64},
                     {"l_extendedprice", LogicalType::Float64},
                     {"l_shipdate", LogicalType::Date}};
  std::string csv =
      "l_quantity|l_extendedprice|l_shipdate\n"
      "17|902.00|1994-02-10\n"
      "36|10001.50|1995-11-03\n";
  auto t = parse_csv_text(csv, schema, '|', "lineitem.csv");
  CHECK(t.row_count() == 2);
  CHECK(t.column("l_quantity").tensor.at<int64_t>(1) == 36);
  CHECK(t.column("l_extendedprice").tensor.at<double>(0) == 902.00);
  CHECK(t.column("l_shipdate").tensor.at<int64_t>(0) == encode_date("1994-02-10"));

  // header mismatch
  CHECK_THROWS_WITH_AS(parse_csv_text("a|b\n", schema, '|', "f"), doctest::Contains("header"),
                       EncodingError);
  // empty file with header -> n = 0
  CHECK(parse_csv_text("l_quantity|l_extendedprice|l_shipdate\n", schema, '|', "f").row_count() ==
        0);
  // NULL/empty field is an error with a line number
  CHECK_THROWS_WITH_AS(
      parse_csv_text("l_quantity|l_extendedprice|l_shipdate\n|9.0|1994-01-01\n", schema, '|', "f"),
      doctest::Contains("f:2"), EncodingError);
  // bad arity names the line
  CHECK_THROWS_WITH_AS(
      parse_csv_text("l_quantity|l_extendedprice|l_shipdate\n1|2.0\n", schema, '|', "f"),
      doctest::Contains("f:2"), EncodingError);
  // comma delimiter
  TableSchema s2{{"x", LogicalType::Int64}};
  CHECK(parse_csv_text("x\n5\n", s2, ',', "f").column("x").tensor.at<int64_t>(0) == 5);

  // file + sidecar round trip
  auto dir = std::filesystem::temp_directory_path() / "tensql_csv_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "t.csv");
    out << "x\n1\n2\n3\n";
    std::ofstream sc(dir / "t.schema.json");
    sc << schema_to_json_text(s2);
  }
  auto loaded = load_table_dir(dir.string(), "t");
  CHECK(loaded.row_count() == 3);
  CHECK_THROWS_AS(load_table_dir(dir.string(), "missing"), EncodingError);
  std::filesystem::remove_all(dir);
}

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "tensql/columnar.hpp"
#include "tensql/plan.hpp"

namespace tensql::testing {

inline TableSchema lineitem_schema() {
  return {{"l_partkey", LogicalType::Int64},
          {"l_quantity", LogicalType::Int64},
          {"l_extendedprice", LogicalType::Float64},
          {"l_discount", LogicalType::Float64},
          {"l_shipdate", LogicalType::Date}};
}

inline TableSchema part_schema() {
  return {{"p_partkey", LogicalType::Int64}, {"p_type", LogicalType::Utf8}};
}

inline Catalog tpch_catalog() {
  Catalog c;
  c.add_table("lineitem", lineitem_schema());
  c.add_table("part", part_schema());
  return c;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("fixture: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string source_path(const std::string& rel) {
  return std::string(TENSQL_SOURCE_DIR) + "/" + rel;
}

inline std::string q6_sql() { return read_file(source_path("queries/q6.sql")); }
inline std::string q14_sql() { return read_file(source_path("queries/q14.sql")); }

// Six handcrafted lineitem rows; exactly rows 0, 2 and 5 satisfy the Q6
// predicate (1994 shipdate, discount in [0.05, 0.07], quantity < 24).
inline std::vector<Row> q6_fixture_rows() {
  return {
      {int64_t{1}, int64_t{10}, 1000.0, 0.05, std::string("1994-03-15")},
      {int64_t{2}, int64_t{30}, 2000.0, 0.06, std::string("1994-06-01")},   // quantity too big
      {int64_t{3}, int64_t{23}, 1500.0, 0.07, std::string("1994-12-31")},
      {int64_t{4}, int64_t{5}, 800.0, 0.04, std::string("1994-05-20")},    // discount too low
      {int64_t{5}, int64_t{5}, 800.0, 0.06, std::string("1995-01-01")},    // shipped too late
      {int64_t{6}, int64_t{1}, 40000.0, 0.05, std::string("1994-01-01")},
  };
}

// revenue = 1000*0.05 + 1500*0.07 + 40000*0.05 = 50 + 105 + 2000
inline double q6_fixture_revenue() { return 2155.0; }

}  // namespace tensql::testing

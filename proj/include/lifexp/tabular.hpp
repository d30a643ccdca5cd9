#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifexp/matrix.hpp"

namespace lifexp {

struct Missing {
  friend bool operator==(Missing, Missing) { return true; }
};

/// A table cell: finite number, category label, or missing.
using Cell = std::variant<double, std::string, Missing>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<Missing>(c); }
inline bool is_number(const Cell& c) { return std::holds_alternative<double>(c); }
inline bool is_category(const Cell& c) { return std::holds_alternative<std::string>(c); }

struct Column {
  std::string name;
  std::vector<Cell> cells;

  friend bool operator==(const Column&, const Column&) = default;
};

/// Ordered, uniquely named columns of equal length.
class Table {
 public:
  Table() = default;
  /// Validates equal lengths and unique, non-empty names.
  explicit Table(std::vector<Column> columns);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }

  bool has_column(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // SchemaError if absent
  const Column& column(const std::string& name) const;
  std::vector<std::string> column_names() const;

  /// True when every non-missing cell of the column is a number.
  bool is_numeric(const std::string& name) const;
  /// Numeric values of a column; SchemaError on missing or category cells.
  Vector numeric_values(const std::string& name) const;

  std::size_t missing_count() const;

  /// Rows kept where keep[i] is true, order preserved.
  Table filter_rows(const std::vector<bool>& keep) const;

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

/// Default missing-value tokens: empty string and "NA".
std::set<std::string> default_missing_tokens();

/// Reads comma-delimited UTF-8 text with a header row. Quoted fields
/// follow the usual CSV convention ("" escapes a quote). Header names are
/// whitespace-trimmed.
Table read_csv(std::istream& source,
               const std::set<std::string>& missing_tokens = default_missing_tokens());
Table read_csv_file(const std::filesystem::path& path,
                    const std::set<std::string>& missing_tokens = default_missing_tokens());

/// Writes the table as CSV; numbers in shortest round-trip form, missing
/// cells empty.
void write_csv(const Table& table, std::ostream& out);

Table rename_columns(const Table& table, const std::map<std::string, std::string>& mapping);

/// Header renaming applied to the WHO life-expectancy file.
std::map<std::string, std::string> who_rename_map();

struct SparseDropResult {
  Table table;
  std::vector<std::string> dropped;
};

/// Removes columns whose missing fraction strictly exceeds the threshold.
SparseDropResult drop_sparse_features(const Table& table, double max_missing_fraction);

/// Removes every row that contains at least one missing cell.
Table drop_incomplete_rows(const Table& table);

struct ConsistencyRule {
  enum class Kind { UpperBound, LowerBound, ColumnLessOrEqual };
  Kind kind = Kind::UpperBound;
  std::string column;  // lhs for ColumnLessOrEqual
  std::string rhs;     // ColumnLessOrEqual only
  double limit = 0.0;  // bounds only

  static ConsistencyRule upper(std::string column, double limit);
  static ConsistencyRule lower(std::string column, double limit);
  static ConsistencyRule less_or_equal(std::string lhs, std::string rhs);

  std::string describe() const;
  friend bool operator==(const ConsistencyRule&, const ConsistencyRule&) = default;
};

struct RuleOutcome {
  std::string rule;
  std::size_t violations = 0;  // rows violating this rule
  std::size_t removed = 0;     // rows whose first violated rule is this one
};

struct RuleReport {
  std::vector<RuleOutcome> per_rule;
  std::size_t rows_before = 0;
  std::size_t rows_after = 0;
};

struct RuleApplication {
  Table table;
  RuleReport report;
};

/// Removes every row that violates any rule.
RuleApplication apply_consistency_rules(const Table& table,
                                        const std::vector<ConsistencyRule>& rules);

/// The shipped rule set for the WHO table.
std::vector<ConsistencyRule> default_consistency_rules();

/// JSON form: [{"kind": "upper_bound"|"lower_bound", "column": c, "limit": x},
///             {"kind": "column_less_or_equal", "lhs": a, "rhs": b}, ...]
std::vector<ConsistencyRule> rules_from_json(const nlohmann::json& doc);
nlohmann::json rules_to_json(const std::vector<ConsistencyRule>& rules);
std::vector<ConsistencyRule> load_rules_file(const std::filesystem::path& path);

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
};

/// Country name to coordinate lookup.
class GeoLookup {
 public:
  GeoLookup() = default;
  /// Validates coordinate ranges and name uniqueness.
  explicit GeoLookup(std::vector<std::pair<std::string, GeoPoint>> entries);

  /// Parses a CSV whose header is exactly `country,latitude,longitude`.
  static GeoLookup read(std::istream& source);
  static GeoLookup read_file(const std::filesystem::path& path);

  const GeoPoint* find(const std::string& country) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, GeoPoint> entries_;
};

/// Replaces the "country" column with numeric "latitude" and "longitude"
/// columns appended at the end.
Table geocode_countries(const Table& table, const GeoLookup& lookup);

/// Replaces a categorical column in place with one 0/1 indicator column per
/// distinct category (sorted), named `<column>_<category lowercased>`.
Table one_hot(const Table& table, const std::string& column);

/// Dense numeric view: features + target.
struct Dataset {
  Matrix features;
  Vector target;
  std::vector<std::string> feature_names;
  std::string target_name;

  std::size_t n_samples() const { return features.rows(); }
  std::size_t n_features() const { return features.cols(); }

  /// Rows picked by index, in order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

Dataset build_dataset(const Table& table, const std::string& target);

}  // namespace lifexp

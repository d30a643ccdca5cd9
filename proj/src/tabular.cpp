#include "lifexp/tabular.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lifexp/errors.hpp"

namespace lifexp {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Splits CSV text into records of raw fields. Tracks the line on which
// each record starts so parse errors can point at it.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Returns false at end of input.
  bool next(std::vector<std::string>& fields, std::size_t& record_line) {
    fields.clear();
    int ch = in_.get();
    if (ch == EOF) return false;
    record_line = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;; ch = in_.get()) {
      if (ch == EOF) {
        if (quoted) throw ParseError("unterminated quoted field", record_line);
        fields.push_back(std::move(field));
        return true;
      }
      const char c = static_cast<char>(ch);
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field += '"';
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field += c;
        }
        continue;
      }
      if (c == '"' && !was_quoted && trim(field).empty()) {
        field.clear();
        quoted = true;
        was_quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && in_.peek() == '\n') in_.get();
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else {
        field += c;
      }
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

bool is_blank_record(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::size_t> rule_columns(const Table& table, const ConsistencyRule& rule) {
  std::vector<std::size_t> cols;
  for (const std::string* name : {&rule.column, &rule.rhs}) {
    if (name->empty()) continue;
    if (!table.has_column(*name))
      throw ConfigError("rule '" + rule.describe() + "' references absent column '" +
                        *name + "'");
    if (!table.is_numeric(*name))
      throw ConfigError("rule '" + rule.describe() + "' references non-numeric column '" +
                        *name + "'");
    cols.push_back(table.index_of(*name));
  }
  return cols;
}

bool violates(const ConsistencyRule& rule, const std::vector<std::size_t>& cols,
              const Table& table, std::size_t row) {
  const auto& columns = table.columns();
  const Cell& lhs = columns[cols[0]].cells[row];
  if (!is_number(lhs)) return false;
  const double a = std::get<double>(lhs);
  switch (rule.kind) {
    case ConsistencyRule::Kind::UpperBound:
      return a > rule.limit;
    case ConsistencyRule::Kind::LowerBound:
      return a < rule.limit;
    case ConsistencyRule::Kind::ColumnLessOrEqual: {
      const Cell& rhs = columns[cols[1]].cells[row];
      return is_number(rhs) && a > std::get<double>(rhs);
    }
  }
  return false;
}

}  // namespace

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  n_rows_ = columns_.empty() ? 0 : columns_.front().cells.size();
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw SchemaError("empty column name");
    if (!seen.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
    if (c.cells.size() != n_rows_)
      throw SchemaError("column '" + c.name + "' has " + std::to_string(c.cells.size()) +
                        " cells, expected " + std::to_string(n_rows_));
  }
}

bool Table::has_column(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

std::size_t Table::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  throw SchemaError("no column named '" + name + "'");
}

const Column& Table::column(const std::string& name) const { return columns_[index_of(name)]; }

std::vector<std::string> Table::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name);
  return names;
}

bool Table::is_numeric(const std::string& name) const {
  const auto& cells = column(name).cells;
  return std::none_of(cells.begin(), cells.end(), is_category);
}

Vector Table::numeric_values(const std::string& name) const {
  const auto& cells = column(name).cells;
  Vector out;
  out.reserve(cells.size());
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (!is_number(cells[r]))
      throw SchemaError("column '" + name + "' row " + std::to_string(r) +
                        (is_missing(cells[r]) ? " is missing" : " is not numeric"));
    out.push_back(std::get<double>(cells[r]));
  }
  return out;
}

std::size_t Table::missing_count() const {
  std::size_t n = 0;
  for (const auto& c : columns_) n += std::count_if(c.cells.begin(), c.cells.end(), is_missing);
  return n;
}

Table Table::filter_rows(const std::vector<bool>& keep) const {
  if (keep.size() != n_rows_) throw ShapeError("row mask length mismatch");
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column nc{c.name, {}};
    for (std::size_t r = 0; r < n_rows_; ++r)
      if (keep[r]) nc.cells.push_back(c.cells[r]);
    out.push_back(std::move(nc));
  }
  Table t(std::move(out));
  if (t.columns_.empty()) t.n_rows_ = 0;
  return t;
}

std::set<std::string> default_missing_tokens() { return {"", "NA"}; }

Table read_csv(std::istream& source, const std::set<std::string>& missing_tokens) {
  CsvReader reader(source);
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!reader.next(fields, line)) throw ParseError("empty input, header row expected", 1);

  std::vector<Column> columns;
  for (auto& f : fields) {
    std::string name = trim(f);
    // Tolerate a UTF-8 byte order mark on the first header.
    if (columns.empty() && name.rfind("\xEF\xBB\xBF", 0) == 0) name = trim(name.substr(3));
    columns.push_back({std::move(name), {}});
  }
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw SchemaError("empty header name");
    if (!seen.insert(c.name).second) throw SchemaError("duplicate header name '" + c.name + "'");
  }

  while (reader.next(fields, line)) {
    if (is_blank_record(fields) && columns.size() != 1) continue;
    if (fields.size() != columns.size())
      throw ParseError("expected " + std::to_string(columns.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string value = trim(fields[i]);
      double number = 0.0;
      if (missing_tokens.contains(value))
        columns[i].cells.emplace_back(Missing{});
      else if (parse_number(value, number))
        columns[i].cells.emplace_back(number);
      else
        columns[i].cells.emplace_back(value);
    }
  }
  return Table(std::move(columns));
}

Table read_csv_file(const std::filesystem::path& path,
                    const std::set<std::string>& missing_tokens) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_csv(in, missing_tokens);
}

void write_csv(const Table& table, std::ostream& out) {
  const auto& cols = table.columns();
  for (std::size_t i = 0; i < cols.size(); ++i)
    out << (i ? "," : "") << quote_if_needed(cols[i].name);
  out << '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out << ',';
      const Cell& c = cols[i].cells[r];
      if (is_number(c))
        out << format_number(std::get<double>(c));
      else if (is_category(c))
        out << quote_if_needed(std::get<std::string>(c));
    }
    out << '\n';
  }
}

Table rename_columns(const Table& table, const std::map<std::string, std::string>& mapping) {
  std::vector<std::string> absent;
  for (const auto& [from, to] : mapping)
    if (!table.has_column(from)) absent.push_back(from);
  if (!absent.empty()) throw SchemaError("cannot rename absent column(s): " + join(absent));

  std::vector<Column> cols = table.columns();
  for (auto& c : cols)
    if (auto it = mapping.find(c.name); it != mapping.end()) c.name = it->second;
  return Table(std::move(cols));
}

std::map<std::string, std::string> who_rename_map() {
  // Keys are the source headers after whitespace trimming.
  return {
      {"Country", "country"},
      {"Year", "year"},
      {"Status", "status"},
      {"Life expectancy", "life_expectancy"},
      {"Adult Mortality", "adult_mortality"},
      {"infant deaths", "infant_deaths"},
      {"Alcohol", "alcohol"},
      {"percentage expenditure", "percent_expenditure"},
      {"Hepatitis B", "hepatitis_b"},
      {"Measles", "measles"},
      {"BMI", "bmi"},
      {"under-five deaths", "under_five_deaths"},
      {"Polio", "polio"},
      {"Total expenditure", "tot_expenditure"},
      {"Diphtheria", "diphtheria"},
      {"HIV/AIDS", "hiv_aids"},
      {"GDP", "gdp"},
      {"Population", "population"},
      {"thinness  1-19 years", "thinness_1to19years"},
      {"thinness 5-9 years", "thinness_5to9years"},
      {"Income composition of resources", "income_composition_of_resources"},
      {"Schooling", "school_years"},
  };
}

SparseDropResult drop_sparse_features(const Table& table, double max_missing_fraction) {
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0))
    throw ContractError("max_missing_fraction must lie in [0, 1]");
  SparseDropResult result;
  std::vector<Column> kept;
  const double n = static_cast<double>(table.n_rows());
  for (const auto& c : table.columns()) {
    const auto missing = std::count_if(c.cells.begin(), c.cells.end(), is_missing);
    // missing / n > threshold, compared without dividing
    if (table.n_rows() > 0 && static_cast<double>(missing) > max_missing_fraction * n)
      result.dropped.push_back(c.name);
    else
      kept.push_back(c);
  }
  result.table = Table(std::move(kept));
  return result;
}

Table drop_incomplete_rows(const Table& table) {
  std::vector<bool> keep(table.n_rows(), true);
  for (const auto& c : table.columns())
    for (std::size_t r = 0; r < table.n_rows(); ++r)
      if (is_missing(c.cells[r])) keep[r] = false;
  return table.filter_rows(keep);
}

ConsistencyRule ConsistencyRule::upper(std::string column, double limit) {
  return {Kind::UpperBound, std::move(column), {}, limit};
}
ConsistencyRule ConsistencyRule::lower(std::string column, double limit) {
  return {Kind::LowerBound, std::move(column), {}, limit};
}
ConsistencyRule ConsistencyRule::less_or_equal(std::string lhs, std::string rhs) {
  return {Kind::ColumnLessOrEqual, std::move(lhs), std::move(rhs), 0.0};
}

std::string ConsistencyRule::describe() const {
  switch (kind) {
    case Kind::UpperBound:
      return column + " <= " + format_number(limit);
    case Kind::LowerBound:
      return column + " >= " + format_number(limit);
    case Kind::ColumnLessOrEqual:
      return column + " <= " + rhs;
  }
  return {};
}

RuleApplication apply_consistency_rules(const Table& table,
                                        const std::vector<ConsistencyRule>& rules) {
  std::vector<std::vector<std::size_t>> cols;
  cols.reserve(rules.size());
  for (const auto& rule : rules) cols.push_back(rule_columns(table, rule));

  RuleApplication out;
  out.report.rows_before = table.n_rows();
  for (const auto& rule : rules) out.report.per_rule.push_back({rule.describe(), 0, 0});

  std::vector<bool> keep(table.n_rows(), true);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t k = 0; k < rules.size(); ++k) {
      if (!violates(rules[k], cols[k], table, r)) continue;
      ++out.report.per_rule[k].violations;
      if (keep[r]) ++out.report.per_rule[k].removed;
      keep[r] = false;
    }
  }
  out.table = table.filter_rows(keep);
  out.report.rows_after = out.table.n_rows();
  return out;
}

std::vector<ConsistencyRule> default_consistency_rules() {
  using R = ConsistencyRule;
  return {
      R::upper("life_expectancy", 100),
      R::upper("bmi", 100),
      R::less_or_equal("infant_deaths", "under_five_deaths"),
      R::upper("adult_mortality", 1000),
      R::upper("infant_deaths", 1000),
      R::upper("under_five_deaths", 1000),
      R::upper("measles", 1000),
      R::upper("hiv_aids", 1000),
      R::lower("polio", 0),
      R::lower("diphtheria", 0),
      R::lower("percent_expenditure", 0),
      R::upper("polio", 100),
      R::upper("diphtheria", 100),
  };
}

std::vector<ConsistencyRule> rules_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ConfigError("rule set must be a JSON array");
  std::vector<ConsistencyRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = "rule " + std::to_string(i);
    try {
      const std::string kind = item.at("kind").get<std::string>();
      if (kind == "upper_bound")
        rules.push_back(ConsistencyRule::upper(item.at("column").get<std::string>(),
                                               item.at("limit").get<double>()));
      else if (kind == "lower_bound")
        rules.push_back(ConsistencyRule::lower(item.at("column").get<std::string>(),
                                               item.at("limit").get<double>()));
      else if (kind == "column_less_or_equal")
        rules.push_back(ConsistencyRule::less_or_equal(item.at("lhs").get<std::string>(),
                                                       item.at("rhs").get<std::string>()));
      else
        throw ConfigError(where + ": unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return rules;
}

nlohmann::json rules_to_json(const std::vector<ConsistencyRule>& rules) {
  auto doc = nlohmann::json::array();
  for (const auto& r : rules) {
    switch (r.kind) {
      case ConsistencyRule::Kind::UpperBound:
        doc.push_back({{"kind", "upper_bound"}, {"column", r.column}, {"limit", r.limit}});
        break;
      case ConsistencyRule::Kind::LowerBound:
        doc.push_back({{"kind", "lower_bound"}, {"column", r.column}, {"limit", r.limit}});
        break;
      case ConsistencyRule::Kind::ColumnLessOrEqual:
        doc.push_back({{"kind", "column_less_or_equal"}, {"lhs", r.column}, {"rhs", r.rhs}});
        break;
    }
  }
  return doc;
}

std::vector<ConsistencyRule> load_rules_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rule file '" + path.string() + "'");
  try {
    return rules_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("rule file '" + path.string() + "': " + e.what());
  }
}

GeoLookup::GeoLookup(std::vector<std::pair<std::string, GeoPoint>> entries) {
  for (auto& [name, point] : entries) {
    if (name.empty()) throw SchemaError("geocode entry with empty country name");
    if (!(point.latitude >= -90.0 && point.latitude <= 90.0) ||
        !(point.longitude >= -180.0 && point.longitude <= 180.0))
      throw SchemaError("geocode entry '" + name + "' has out-of-range coordinates");
    if (!entries_.emplace(name, point).second)
      throw SchemaError("duplicate geocode entry '" + name + "'");
  }
}

GeoLookup GeoLookup::read(std::istream& source) {
  const Table t = read_csv(source, {});
  if (t.column_names() != std::vector<std::string>{"country", "latitude", "longitude"})
    throw SchemaError("geocode header must be exactly 'country,latitude,longitude'");
  std::vector<std::pair<std::string, GeoPoint>> entries;
  const auto& cols = t.columns();
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    if (!is_number(cols[1].cells[r]) || !is_number(cols[2].cells[r]))
      throw SchemaError("geocode row " + std::to_string(r + 1) + " has non-numeric coordinates");
    const Cell& name = cols[0].cells[r];
    std::string country = is_category(name) ? std::get<std::string>(name)
                                            : format_number(std::get<double>(name));
    entries.emplace_back(std::move(country), GeoPoint{std::get<double>(cols[1].cells[r]),
                                                      std::get<double>(cols[2].cells[r])});
  }
  return GeoLookup(std::move(entries));
}

GeoLookup GeoLookup::read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open geocode file '" + path.string() + "'");
  return read(in);
}

const GeoPoint* GeoLookup::find(const std::string& country) const {
  const auto it = entries_.find(country);
  return it == entries_.end() ? nullptr : &it->second;
}

Table geocode_countries(const Table& table, const GeoLookup& lookup) {
  if (!table.has_column("country")) throw SchemaError("geocode: no 'country' column");
  const auto& cells = table.column("country").cells;

  std::set<std::string> unmatched;
  Column lat{"latitude", {}};
  Column lon{"longitude", {}};
  for (const Cell& c : cells) {
    if (!is_category(c)) throw SchemaError("geocode: 'country' column must be categorical");
    const auto& name = std::get<std::string>(c);
    if (const GeoPoint* p = lookup.find(name)) {
      lat.cells.emplace_back(p->latitude);
      lon.cells.emplace_back(p->longitude);
    } else {
      unmatched.insert(name);
    }
  }
  if (!unmatched.empty())
    throw SchemaError("geocode: no coordinates for " +
                      join(std::vector<std::string>(unmatched.begin(), unmatched.end())));

  std::vector<Column> cols;
  for (const auto& c : table.columns())
    if (c.name != "country") cols.push_back(c);
  for (const char* name : {"latitude", "longitude"})
    if (table.has_column(name)) throw SchemaError(std::string("geocode: column '") + name + "' exists");
  cols.push_back(std::move(lat));
  cols.push_back(std::move(lon));
  return Table(std::move(cols));
}

Table one_hot(const Table& table, const std::string& column) {
  const std::size_t idx = table.index_of(column);
  const auto& cells = table.columns()[idx].cells;
  std::set<std::string> categories;
  for (const Cell& c : cells) {
    if (!is_category(c))
      throw SchemaError("one_hot: column '" + column + "' holds " +
                        (is_number(c) ? "numeric" : "missing") + " cells");
    categories.insert(std::get<std::string>(c));
  }

  std::vector<Column> indicators;
  for (const auto& cat : categories) {
    Column ind{column + "_" + lowercase(cat), {}};
    ind.cells.reserve(cells.size());
    for (const Cell& c : cells) ind.cells.emplace_back(std::get<std::string>(c) == cat ? 1.0 : 0.0);
    indicators.push_back(std::move(ind));
  }

  std::vector<Column> cols;
  for (std::size_t i = 0; i < table.n_cols(); ++i) {
    if (i == idx)
      for (auto& ind : indicators) cols.push_back(std::move(ind));
    else
      cols.push_back(table.columns()[i]);
  }
  return Table(std::move(cols));
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.target.reserve(rows.size());
  for (std::size_t r : rows) out.target.push_back(target[r]);
  out.feature_names = feature_names;
  out.target_name = target_name;
  return out;
}

Dataset build_dataset(const Table& table, const std::string& target) {
  if (!table.has_column(target)) throw SchemaError("target column '" + target + "' not found");
  Dataset ds;
  ds.target_name = target;
  std::vector<Vector> feature_columns;
  for (const auto& c : table.columns()) {
    Vector values = table.numeric_values(c.name);  // throws naming the column
    if (c.name == target) {
      ds.target = std::move(values);
    } else {
      ds.feature_names.push_back(c.name);
      feature_columns.push_back(std::move(values));
    }
  }
  ds.features = Matrix(table.n_rows(), feature_columns.size());
  for (std::size_t j = 0; j < feature_columns.size(); ++j)
    ds.features.set_column(j, feature_columns[j]);
  return ds;
}

}  // namespace lifexp

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifexp/matrix.hpp"

namespace lifexp {

/// The run report is a JSON document with top-level sections meta,
/// preprocess, explore, cluster and models; see docs/report-schema.md.
using RunReport = nlohmann::json;

/// Canonical serialization: keys sorted, two-space indentation, floating
/// point numbers printed with 17 significant digits, trailing newline.
/// Throws ContractError naming the field path of any NaN or infinity.
std::string emit_json(const nlohmann::json& doc);

/// emit_json written to `destination`; IoError when it cannot be written.
void emit_report(const RunReport& report, const std::filesystem::path& destination);

RunReport load_report(const std::filesystem::path& source);

enum class ChartKind { Histogram, Scatter, Line, Bar, Heatmap };

struct Series {
  std::string name;
  Vector x;  // histogram: bin edges; bar: unused
  Vector y;  // histogram: counts
};

struct ChartSpec {
  ChartKind kind = ChartKind::Scatter;
  std::vector<Series> series;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool identity_line = false;  // scatter only

  // Bar: one label per bar. Heatmap: row labels.
  std::vector<std::string> categories;
  // Heatmap only.
  std::vector<std::string> column_labels;
  Matrix cells;
};

/// Standalone SVG 1.1 document on an 800×600 canvas. Throws ChartSpecError
/// for empty or inconsistent series.
std::string render_chart(const ChartSpec& spec);

/// (file name, contents) pairs for every chart the report has data for.
/// Sections absent from the report are skipped.
std::vector<std::pair<std::string, std::string>> standard_chart_suite(const RunReport& report);

}  // namespace lifexp

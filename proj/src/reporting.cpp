#include "lifexp/reporting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lifexp/errors.hpp"

namespace lifexp {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void escape_into(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void emit_value(std::string& out, const json& v, const std::string& path, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent), ' ');
  switch (v.type()) {
    case json::value_t::null:
      out += "null";
      break;
    case json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      break;
    case json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      break;
    case json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d))
        throw ContractError("report field '" + (path.empty() ? std::string("<root>") : path) +
                            "' is not finite");
      out += format_double(d);
      break;
    }
    case json::value_t::string:
      escape_into(out, v.get_ref<const std::string&>());
      break;
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        break;
      }
      // Arrays of scalars stay on one line; they dominate the report size.
      const bool flat = std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); });
      out += '[';
      std::size_t i = 0;
      for (const auto& e : v) {
        if (i > 0) out += flat ? ", " : ",";
        if (!flat) out += "\n" + pad;
        emit_value(out, e, path + "[" + std::to_string(i) + "]", indent + 2);
        ++i;
      }
      if (!flat) out += "\n" + close_pad;
      out += ']';
      break;
    }
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, e] : v.items()) {  // std::map storage: sorted keys
        if (!first) out += ',';
        first = false;
        out += "\n" + pad;
        escape_into(out, key);
        out += ": ";
        emit_value(out, e, path.empty() ? key : path + "." + key, indent + 2);
      }
      out += "\n" + close_pad + "}";
      break;
    }
    case json::value_t::binary:
    case json::value_t::discarded:
      throw ContractError("report field '" + path + "' has an unsupported type");
  }
}

}  // namespace

std::string emit_json(const nlohmann::json& doc) {
  std::string out;
  emit_value(out, doc, "", 0);
  out += '\n';
  return out;
}

void emit_report(const RunReport& report, const std::filesystem::path& destination) {
  const std::string text = emit_json(report);
  std::ofstream out(destination, std::ios::binary);
  if (!out) throw IoError("cannot write " + destination.string());
  out << text;
  if (!out) throw IoError("write failed: " + destination.string());
}

RunReport load_report(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot read " + source.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(source.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr int kTicks = 10;

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range widen(Range r) {
  if (!(r.hi > r.lo)) return {r.lo - 0.5, r.hi + 0.5};
  return r;
}

struct Frame {
  double left, top, right, bottom;
  Range xr, yr;

  double px(double x) const { return left + (x - xr.lo) / (xr.hi - xr.lo) * (right - left); }
  double py(double y) const { return bottom - (y - yr.lo) / (yr.hi - yr.lo) * (bottom - top); }
};

void check_finite(const Vector& v, const std::string& what) {
  for (double d : v)
    if (!std::isfinite(d)) throw ChartSpecError(what + " contains a non-finite value");
}

void open_document(std::ostringstream& s, const std::string& title) {
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"600\" "
       "viewBox=\"0 0 800 600\" font-family=\"sans-serif\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n"
    << "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">" << xml_escape(title)
    << "</text>\n";
}

void draw_axes(std::ostringstream& s, const Frame& f, const std::string& x_label, const std::string& y_label,
               bool x_ticks) {
  s << "<g stroke=\"#000000\" stroke-width=\"1\">\n"
    << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.bottom) << "\" x2=\"" << num(f.right) << "\" y2=\""
    << num(f.bottom) << "\"/>\n"
    << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.top) << "\" x2=\"" << num(f.left) << "\" y2=\""
    << num(f.bottom) << "\"/>\n"
    << "</g>\n";
  s << "<g font-size=\"11\">\n";
  for (int i = 0; i <= kTicks; ++i) {
    const double t = static_cast<double>(i) / kTicks;
    if (x_ticks) {
      const double v = f.xr.lo + t * (f.xr.hi - f.xr.lo);
      const double x = f.px(v);
      s << "<line x1=\"" << num(x) << "\" y1=\"" << num(f.bottom) << "\" x2=\"" << num(x) << "\" y2=\""
        << num(f.bottom + 5) << "\" stroke=\"#000000\"/>\n"
        << "<text x=\"" << num(x) << "\" y=\"" << num(f.bottom + 18) << "\" text-anchor=\"middle\">"
        << tick_label(v) << "</text>\n";
    }
    const double v = f.yr.lo + t * (f.yr.hi - f.yr.lo);
    const double y = f.py(v);
    s << "<line x1=\"" << num(f.left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(f.left) << "\" y2=\""
      << num(y) << "\" stroke=\"#000000\"/>\n"
      << "<text x=\"" << num(f.left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
      << tick_label(v) << "</text>\n";
  }
  s << "</g>\n";
  s << "<text x=\"" << num((f.left + f.right) / 2) << "\" y=\"" << num(kHeight - 12)
    << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(x_label) << "</text>\n";
  s << "<text x=\"16\" y=\"" << num((f.top + f.bottom) / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
    << "transform=\"rotate(-90 16 " << num((f.top + f.bottom) / 2) << ")\">" << xml_escape(y_label)
    << "</text>\n";
}

void draw_legend(std::ostringstream& s, const std::vector<Series>& series, double right, double top) {
  if (series.size() < 2) return;
  s << "<g font-size=\"11\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = top + 8 + 16 * static_cast<double>(i);
    s << "<rect x=\"" << num(right - 110) << "\" y=\"" << num(y - 8) << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[i % kPalette.size()] << "\"/>\n"
      << "<text x=\"" << num(right - 95) << "\" y=\"" << num(y + 1) << "\">" << xml_escape(series[i].name)
      << "</text>\n";
  }
  s << "</g>\n";
}

std::string render_histogram(const ChartSpec& spec) {
  const Series& h = spec.series.front();
  if (h.y.empty()) throw ChartSpecError("histogram has no bins");
  if (h.x.size() != h.y.size() + 1) throw ChartSpecError("histogram needs one more edge than counts");
  for (std::size_t i = 1; i < h.x.size(); ++i)
    if (!(h.x[i] > h.x[i - 1])) throw ChartSpecError("histogram edges must increase");
  const double top = *std::max_element(h.y.begin(), h.y.end());
  Frame f{80, 60, 770, 540, {h.x.front(), h.x.back()}, widen({0.0, top})};
  std::ostringstream s;
  open_document(s, spec.title);
  s << "<g fill=\"" << kPalette[0] << "\" stroke=\"#ffffff\" stroke-width=\"0.5\">\n";
  for (std::size_t i = 0; i < h.y.size(); ++i) {
    const double x0 = f.px(h.x[i]), x1 = f.px(h.x[i + 1]);
    const double y = f.py(h.y[i]);
    s << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(x1 - x0) << "\" height=\""
      << num(f.bottom - y) << "\"/>\n";
  }
  s << "</g>\n";
  draw_axes(s, f, spec.x_label, spec.y_label, true);
  s << "</svg>\n";
  return s.str();
}

std::string render_xy(const ChartSpec& spec, bool lines) {
  Range xr{INFINITY, -INFINITY}, yr{INFINITY, -INFINITY};
  for (const auto& series : spec.series) {
    if (series.x.size() != series.y.size())
      throw ChartSpecError("series '" + series.name + "' has mismatched x and y lengths");
    for (double v : series.x) xr = {std::min(xr.lo, v), std::max(xr.hi, v)};
    for (double v : series.y) yr = {std::min(yr.lo, v), std::max(yr.hi, v)};
  }
  if (!(xr.lo <= xr.hi)) throw ChartSpecError("chart has no points");
  if (spec.identity_line) {
    const Range both{std::min(xr.lo, yr.lo), std::max(xr.hi, yr.hi)};
    xr = yr = both;
  }
  Frame f{80, 60, 770, 540, widen(xr), widen(yr)};
  std::ostringstream s;
  open_document(s, spec.title);
  draw_axes(s, f, spec.x_label, spec.y_label, true);
  if (spec.identity_line) {
    const double lo = std::max(f.xr.lo, f.yr.lo), hi = std::min(f.xr.hi, f.yr.hi);
    s << "<line x1=\"" << num(f.px(lo)) << "\" y1=\"" << num(f.py(lo)) << "\" x2=\"" << num(f.px(hi))
      << "\" y2=\"" << num(f.py(hi)) << "\" stroke=\"#444444\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& series = spec.series[k];
    const char* color = kPalette[k % kPalette.size()];
    if (lines && series.x.size() > 1) {
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < series.x.size(); ++i)
        s << (i ? " " : "") << num(f.px(series.x[i])) << "," << num(f.py(series.y[i]));
      s << "\"/>\n";
    }
    s << "<g fill=\"" << color << "\"" << (lines ? "" : " fill-opacity=\"0.7\"") << ">\n";
    for (std::size_t i = 0; i < series.x.size(); ++i)
      s << "<circle cx=\"" << num(f.px(series.x[i])) << "\" cy=\"" << num(f.py(series.y[i])) << "\" r=\"3\"/>\n";
    s << "</g>\n";
  }
  draw_legend(s, spec.series, f.right, f.top);
  s << "</svg>\n";
  return s.str();
}

std::string render_bar(const ChartSpec& spec) {
  const Series& bars = spec.series.front();
  if (bars.y.empty()) throw ChartSpecError("bar chart has no bars");
  if (spec.categories.size() != bars.y.size())
    throw ChartSpecError("bar chart needs one category label per bar");
  Range yr{0.0, 0.0};
  for (double v : bars.y) yr = {std::min(yr.lo, v), std::max(yr.hi, v)};
  Frame f{80, 60, 770, 450, {0.0, static_cast<double>(bars.y.size())}, widen(yr)};
  std::ostringstream s;
  open_document(s, spec.title);
  const double slot = (f.right - f.left) / static_cast<double>(bars.y.size());
  s << "<g fill=\"" << kPalette[0] << "\">\n";
  for (std::size_t i = 0; i < bars.y.size(); ++i) {
    const double y0 = f.py(0.0), y1 = f.py(bars.y[i]);
    s << "<rect x=\"" << num(f.left + slot * (static_cast<double>(i) + 0.1)) << "\" y=\"" << num(std::min(y0, y1))
      << "\" width=\"" << num(slot * 0.8) << "\" height=\"" << num(std::abs(y0 - y1)) << "\"/>\n";
  }
  s << "</g>\n<g font-size=\"11\">\n";
  for (std::size_t i = 0; i < bars.y.size(); ++i) {
    const double x = f.left + slot * (static_cast<double>(i) + 0.5);
    s << "<text x=\"" << num(x) << "\" y=\"" << num(f.bottom + 12) << "\" text-anchor=\"end\" transform=\"rotate(-45 "
      << num(x) << " " << num(f.bottom + 12) << ")\">" << xml_escape(spec.categories[i]) << "</text>\n";
  }
  s << "</g>\n";
  draw_axes(s, f, spec.x_label, spec.y_label, false);
  s << "</svg>\n";
  return s.str();
}

// Diverging blue-white-red scale pinned to [-1, 1].
std::string heat_color(double v) {
  const double t = std::clamp(v, -1.0, 1.0);
  const std::array<double, 3> white{247, 247, 247};
  const std::array<double, 3> end = t < 0 ? std::array<double, 3>{33, 102, 172} : std::array<double, 3>{178, 24, 43};
  const double a = std::abs(t);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(white[0] + a * (end[0] - white[0]))),
                static_cast<int>(std::lround(white[1] + a * (end[1] - white[1]))),
                static_cast<int>(std::lround(white[2] + a * (end[2] - white[2]))));
  return buf;
}

std::string render_heatmap(const ChartSpec& spec) {
  const std::size_t rows = spec.cells.rows(), cols = spec.cells.cols();
  if (rows == 0 || cols == 0) throw ChartSpecError("heatmap has no cells");
  if (spec.categories.size() != rows || spec.column_labels.size() != cols)
    throw ChartSpecError("heatmap labels do not match the cell matrix");
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (!std::isfinite(spec.cells(i, j))) throw ChartSpecError("heatmap contains a non-finite cell");
  const double left = 190, top = 50, right = 780, bottom = 460;
  const double cw = (right - left) / static_cast<double>(cols);
  const double ch = (bottom - top) / static_cast<double>(rows);
  const double font = std::clamp(std::min(cw, ch) * 0.35, 6.0, 14.0);
  std::ostringstream s;
  open_document(s, spec.title);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = left + cw * static_cast<double>(j), y = top + ch * static_cast<double>(i);
      const double v = spec.cells(i, j);
      s << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw) << "\" height=\"" << num(ch)
        << "\" fill=\"" << heat_color(v) << "\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n";
      char value[16];
      std::snprintf(value, sizeof value, "%.2f", v);
      s << "<text x=\"" << num(x + cw / 2) << "\" y=\"" << num(y + ch / 2 + font / 3)
        << "\" text-anchor=\"middle\" font-size=\"" << num(font) << "\">" << value << "</text>\n";
    }
  }
  s << "<g font-size=\"11\">\n";
  for (std::size_t i = 0; i < rows; ++i)
    s << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + ch * (static_cast<double>(i) + 0.5) + 4)
      << "\" text-anchor=\"end\">" << xml_escape(spec.categories[i]) << "</text>\n";
  for (std::size_t j = 0; j < cols; ++j) {
    const double x = left + cw * (static_cast<double>(j) + 0.5);
    s << "<text x=\"" << num(x) << "\" y=\"" << num(bottom + 12) << "\" text-anchor=\"end\" transform=\"rotate(-45 "
      << num(x) << " " << num(bottom + 12) << ")\">" << xml_escape(spec.column_labels[j]) << "</text>\n";
  }
  s << "</g>\n";
  // Colour bar.
  for (int i = 0; i <= 20; ++i) {
    const double v = -1.0 + 0.1 * i;
    s << "<rect x=\"" << num(left + (right - left) * i / 21.0) << "\" y=\"575\" width=\""
      << num((right - left) / 21.0) << "\" height=\"12\" fill=\"" << heat_color(v) << "\"/>\n";
  }
  s << "<text x=\"" << num(left - 6) << "\" y=\"585\" text-anchor=\"end\" font-size=\"11\">-1</text>\n"
    << "<text x=\"" << num(right + 4) << "\" y=\"585\" font-size=\"11\">1</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::string render_chart(const ChartSpec& spec) {
  if (spec.kind == ChartKind::Heatmap) return render_heatmap(spec);
  if (spec.series.empty()) throw ChartSpecError("chart '" + spec.title + "' has no series");
  for (const auto& series : spec.series) {
    check_finite(series.x, "series '" + series.name + "'");
    check_finite(series.y, "series '" + series.name + "'");
  }
  switch (spec.kind) {
    case ChartKind::Histogram:
      return render_histogram(spec);
    case ChartKind::Scatter:
      return render_xy(spec, false);
    case ChartKind::Line:
      return render_xy(spec, true);
    case ChartKind::Bar:
      return render_bar(spec);
    case ChartKind::Heatmap:
      break;
  }
  return render_heatmap(spec);
}

namespace {

std::string safe_name(const std::string& name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

Vector as_vector(const json& arr) {
  Vector v;
  for (const auto& e : arr) v.push_back(e.get<double>());
  return v;
}

const json* find_path(const json& doc, std::initializer_list<const char*> keys) {
  const json* cur = &doc;
  for (const char* k : keys) {
    if (!cur->is_object() || !cur->contains(k)) return nullptr;
    cur = &(*cur)[k];
  }
  return cur->is_null() ? nullptr : cur;
}

std::string model_title(const std::string& key) {
  if (key == "lr") return "Linear Regression";
  if (key == "tree") return "Regression Tree";
  if (key == "forest") return "Random Forest";
  return key;
}

ChartSpec histogram_spec(const json& h, const std::string& name) {
  ChartSpec spec;
  spec.kind = ChartKind::Histogram;
  spec.series.push_back({name, as_vector(h.at("bin_edges")), as_vector(h.at("counts"))});
  spec.title = "Histogram of " + name;
  spec.x_label = name;
  spec.y_label = "count";
  return spec;
}

ChartSpec importance_spec(const json& entries, const std::string& title, const char* value_key,
                          const std::string& y_label) {
  ChartSpec spec;
  spec.kind = ChartKind::Bar;
  spec.title = title;
  spec.y_label = y_label;
  Series bars{value_key, {}, {}};
  for (const auto& e : entries) {
    if (e.at(value_key).is_null()) continue;
    spec.categories.push_back(e.at("name").get<std::string>());
    bars.y.push_back(e.at(value_key).get<double>());
  }
  spec.series.push_back(std::move(bars));
  return spec;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> standard_chart_suite(const RunReport& report) {
  std::vector<std::pair<std::string, std::string>> out;
  try {
    if (const json* hists = find_path(report, {"explore", "histograms"}))
      for (const auto& [name, h] : hists->items())
        out.emplace_back("fig_hist_" + safe_name(name) + ".svg", render_chart(histogram_spec(h, name)));
    if (const json* h = find_path(report, {"explore", "target_histogram"}))
      out.emplace_back("fig_hist_target.svg", render_chart(histogram_spec(*h, h->at("name").get<std::string>())));

    if (const json* corr = find_path(report, {"explore", "correlation_features"})) {
      ChartSpec spec;
      spec.kind = ChartKind::Heatmap;
      spec.title = "Pearson correlation between features";
      spec.categories = corr->at("names").get<std::vector<std::string>>();
      spec.column_labels = spec.categories;
      std::vector<Vector> rows;
      for (const auto& r : corr->at("r")) rows.push_back(as_vector(r));
      spec.cells = rows.empty() ? Matrix() : Matrix::from_rows(rows);
      out.emplace_back("fig_corr_features.svg", render_chart(spec));
    }
    if (const json* corr = find_path(report, {"explore", "correlation_target"})) {
      ChartSpec spec;
      spec.kind = ChartKind::Heatmap;
      const auto target = corr->at("target").get<std::string>();
      spec.title = "Pearson correlation with " + target;
      spec.categories = corr->at("names").get<std::vector<std::string>>();
      spec.column_labels = {target};
      const Vector r = as_vector(corr->at("r"));
      spec.cells = Matrix(r.size(), 1, 0.0);
      for (std::size_t i = 0; i < r.size(); ++i) spec.cells(i, 0) = r[i];
      out.emplace_back("fig_corr_target.svg", render_chart(spec));
    }

    if (const json* curve = find_path(report, {"cluster", "silhouette_curve"})) {
      ChartSpec spec;
      spec.kind = ChartKind::Line;
      spec.title = "Silhouette score by number of clusters";
      spec.x_label = "k";
      spec.y_label = "silhouette";
      Series s{"silhouette", {}, {}};
      for (const auto& p : *curve) {
        s.x.push_back(p.at("k").get<double>());
        s.y.push_back(p.at("silhouette").get<double>());
      }
      spec.series.push_back(std::move(s));
      out.emplace_back("fig_silhouette.svg", render_chart(spec));
    }
    if (const json* pca = find_path(report, {"cluster", "pca"})) {
      ChartSpec spec;
      spec.kind = ChartKind::Scatter;
      spec.title = "Clusters on the first two principal components";
      spec.x_label = "PC1";
      spec.y_label = "PC2";
      const auto& proj = pca->at("projection");
      const auto& labels = pca->at("labels");
      std::size_t k = 0;
      for (const auto& l : labels) k = std::max(k, l.get<std::size_t>() + 1);
      spec.series.resize(k);
      for (std::size_t c = 0; c < k; ++c) spec.series[c].name = "cluster " + std::to_string(c);
      for (std::size_t i = 0; i < proj.size(); ++i) {
        auto& s = spec.series[labels[i].get<std::size_t>()];
        s.x.push_back(proj[i].at(0).get<double>());
        s.y.push_back(proj[i].size() > 1 ? proj[i].at(1).get<double>() : 0.0);
      }
      out.emplace_back("fig_pca_clusters.svg", render_chart(spec));
    }

    if (const json* models = find_path(report, {"models"})) {
      for (const char* key : {"lr", "tree", "forest"}) {
        const json* m = find_path(*models, {key});
        if (!m) continue;
        if (const json* pred = find_path(*m, {"test_predictions"})) {
          ChartSpec spec;
          spec.kind = ChartKind::Scatter;
          spec.identity_line = true;
          spec.title = "Actual vs Predicted (" + model_title(key) + ", test set)";
          spec.x_label = "actual";
          spec.y_label = "predicted";
          spec.series.push_back({"test", as_vector(pred->at("actual")), as_vector(pred->at("predicted"))});
          out.emplace_back(std::string("fig_actual_vs_predicted_") + key + ".svg", render_chart(spec));
        }
      }
      if (const json* coefs = find_path(*models, {"lr", "coefficients"})) {
        json features = json::array();
        for (const auto& c : *coefs)
          if (c.at("name") != "(intercept)") features.push_back(c);
        out.emplace_back("fig_lr_pvalues.svg",
                         render_chart(importance_spec(features, "P-values of linear regression features", "p_value",
                                                      "p-value")));
      }
      if (const json* imp = find_path(*models, {"tree", "importances"}))
        out.emplace_back("fig_tree_importances.svg",
                         render_chart(importance_spec(*imp, "Feature importance (Regression Tree)", "importance",
                                                      "importance")));
      if (const json* imp = find_path(*models, {"forest", "importances"}))
        out.emplace_back("fig_forest_importances.svg",
                         render_chart(importance_spec(*imp, "Feature importance (Random Forest)", "importance",
                                                      "importance")));
      if (const json* dot = find_path(*models, {"tree", "rendering", "dot"}))
        out.emplace_back("fig_tree_structure.dot", dot->get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ChartSpecError(std::string("malformed report section: ") + e.what());
  }
  return out;
}

}  // namespace lifexp

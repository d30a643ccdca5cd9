#include "lifexp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json_fields.hpp"
#include "lifexp/errors.hpp"
#include "lifexp/explore.hpp"
#include "lifexp/forest.hpp"
#include "lifexp/ols.hpp"
#include "lifexp/rng.hpp"
#include "lifexp/tree.hpp"
#include "lifexp/unsupervised.hpp"

#ifndef LIFEXP_DATA_DIR
#define LIFEXP_DATA_DIR "data"
#endif

namespace lifexp {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Streams of the master seed handed to each randomized stage.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kCvStream = 2;
constexpr std::uint64_t kForestStream = 3;

std::vector<json> values(std::initializer_list<json> v) { return std::vector<json>(v); }

json grid_to_json(const ParamGrid& grid) {
  json axes = json::array();
  for (const auto& [name, vals] : grid) axes.push_back({{"name", name}, {"values", vals}});
  return axes;
}

ParamGrid grid_from_config(const ordered_json& v, const std::string& key) {
  if (v.is_object()) return param_grid_from_json(v);
  if (v.is_array()) {
    ordered_json obj = ordered_json::object();
    for (const auto& axis : v) {
      if (!axis.is_object() || !axis.contains("name") || !axis.contains("values"))
        throw ConfigError(key + ": array form needs {\"name\", \"values\"} entries");
      obj[axis.at("name").get<std::string>()] = axis.at("values");
    }
    return param_grid_from_json(obj);
  }
  throw ConfigError(key + " must be an object or an array of axes");
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metrics_json(const MetricSet& m) {
  return {{"r2", m.r2 ? json(*m.r2) : json(nullptr)}, {"mae", m.mae}, {"mse", m.mse}, {"rmse", m.rmse}};
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    rows.push_back(Vector(r.begin(), r.end()));
  }
  return rows;
}

json named_values(const std::vector<std::string>& names, const Vector& v, const char* key) {
  json out = json::array();
  for (std::size_t j = 0; j < names.size(); ++j) out.push_back({{"name", names[j]}, {key, v[j]}});
  return out;
}

template <typename F>
auto run_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error("stage '" + stage + "': " + e.what());
  }
}

json stage_shape(const std::string& stage, const Table& t) {
  return {{"stage", stage}, {"rows", t.n_rows()}, {"columns", t.n_cols()}};
}

fs::path report_path(const PipelineConfig& c) { return c.out / "report.json"; }
fs::path timings_path(const PipelineConfig& c) { return c.out / "timings.json"; }
fs::path clean_path(const PipelineConfig& c) { return c.out / "clean.csv"; }
fs::path consistent_path(const PipelineConfig& c) { return c.out / "consistent.csv"; }

void require(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p))
    throw Error(p.string() + " not found; run `lifexp " + stage + "` first");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed: " + p.string());
}

void write_table(const fs::path& p, const Table& t) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  write_csv(t, out);
  if (!out) throw IoError("write failed: " + p.string());
}

Dataset load_clean(const PipelineConfig& c) {
  require(clean_path(c), "preprocess");
  return build_dataset(read_csv_file(clean_path(c)), c.target);
}

RunReport load_existing_report(const PipelineConfig& c) {
  require(report_path(c), "preprocess");
  return load_report(report_path(c));
}

json load_timings(const PipelineConfig& c) {
  if (!fs::exists(timings_path(c))) return json::object();
  return load_report(timings_path(c));
}

void save_timings(const PipelineConfig& c, json timings) {
  timings["updated_at"] = utc_now();
  write_text(timings_path(c), timings.dump(2) + "\n");
}

}  // namespace

ParamGrid PipelineConfig::default_tree_grid() {
  return {
      {"max_depth", values({5, 10, 15, 20, nullptr})},
      {"min_samples_leaf", values({1, 2, 5, 10})},
      {"ccp_alpha", values({0.0, 0.005, 0.01, 0.05})},
      {"criterion", values({"squared_error", "absolute_error"})},
  };
}

ParamGrid PipelineConfig::default_forest_grid() {
  return {
      {"n_trees", values({50, 100, 200})},
      {"max_features", values({"all", "sqrt", "log2"})},
      {"bootstrap", values({true, false})},
      {"min_samples_split", values({2, 5})},
  };
}

void PipelineConfig::validate() const {
  if (input.empty()) throw ConfigError("config: 'input' is required");
  if (geocode.empty()) throw ConfigError("config: 'geocode' must not be empty");
  if (out.empty()) throw ConfigError("config: 'out' must not be empty");
  if (target.empty()) throw ConfigError("config: 'target' must not be empty");
  if (!(missing_fraction >= 0.0 && missing_fraction <= 1.0))
    throw ConfigError("config: missing_fraction must lie in [0, 1]");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("config: split_ratio must lie in (0, 1)");
  if (k_min < 1 || k_max < k_min) throw ConfigError("config: need 1 <= k_min <= k_max");
  if (cv_folds < 2) throw ConfigError("config: cv_folds must be at least 2");
  if (histogram_bins < 1) throw ConfigError("config: histogram_bins must be at least 1");
  if (!(alpha > 0.0)) throw ConfigError("config: alpha must be positive");
  if (timing_repeats < 1) throw ConfigError("config: timing_repeats must be at least 1");
  if (tree_grid.empty() || forest_grid.empty()) throw ConfigError("config: grids must not be empty");
  for (const auto& a : anova)
    if (a.find(':') == std::string::npos) throw ConfigError("config: anova entry '" + a + "' is not numeric:categorical");
}

json PipelineConfig::to_json() const {
  json j;
  j["input"] = input.string();
  j["geocode"] = geocode.string();
  if (!rules.empty())
    j["rules"] = rules.string();
  else if (inline_rules)
    j["rules"] = rules_to_json(*inline_rules);
  else
    j["rules"] = "default";
  j["rename"] = rename;
  j["one_hot"] = one_hot;
  j["missing_fraction"] = missing_fraction;
  j["target"] = target;
  j["split_ratio"] = split_ratio;
  j["seed"] = seed;
  j["k_min"] = k_min;
  j["k_max"] = k_max;
  j["cv_folds"] = cv_folds;
  j["histogram_bins"] = histogram_bins;
  j["anova"] = anova;
  j["alpha"] = alpha;
  j["tree_render_depth"] = tree_render_depth;
  j["timing_repeats"] = timing_repeats;
  j["tree_grid"] = grid_to_json(tree_grid);
  j["forest_grid"] = grid_to_json(forest_grid);
  return j;
}

PipelineConfig config_from_json(const ordered_json& doc, const fs::path& base_dir, PipelineConfig c) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  auto path_of = [&](const ordered_json& v) {
    fs::path p = v.get<std::string>();
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "input") c.input = path_of(v);
      else if (key == "geocode") c.geocode = path_of(v);
      else if (key == "rules") {
        if (v.is_string()) {
          c.rules = path_of(v);
          c.inline_rules.reset();
        } else {
          c.inline_rules = rules_from_json(json::parse(v.dump()));
          c.rules.clear();
        }
      } else if (key == "rename") c.rename = v.get<std::map<std::string, std::string>>();
      else if (key == "one_hot") c.one_hot = v.get<std::vector<std::string>>();
      else if (key == "missing_fraction") c.missing_fraction = v.get<double>();
      else if (key == "target") c.target = v.get<std::string>();
      else if (key == "split_ratio") c.split_ratio = v.get<double>();
      else if (key == "seed") c.seed = detail::unsigned_field(v, key);
      else if (key == "k_min") c.k_min = detail::unsigned_field(v, key);
      else if (key == "k_max") c.k_max = detail::unsigned_field(v, key);
      else if (key == "k_range") {
        if (!v.is_array() || v.size() != 2) throw ConfigError("config: k_range must be [k_min, k_max]");
        c.k_min = detail::unsigned_field(v[0], "k_range");
        c.k_max = detail::unsigned_field(v[1], "k_range");
      } else if (key == "cv_folds") c.cv_folds = detail::unsigned_field(v, key);
      else if (key == "histogram_bins") c.histogram_bins = detail::unsigned_field(v, key);
      else if (key == "anova") c.anova = v.get<std::vector<std::string>>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "tree_render_depth") c.tree_render_depth = detail::unsigned_field(v, key);
      else if (key == "timing_repeats") c.timing_repeats = detail::unsigned_field(v, key);
      else if (key == "tree_grid") c.tree_grid = grid_from_config(v, key);
      else if (key == "forest_grid") c.forest_grid = grid_from_config(v, key);
      else if (key == "out") c.out = path_of(v);
      else if (key == "threads") c.threads = detail::unsigned_field(v, key);
      else throw ConfigError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.geocode.empty()) c.geocode = fs::path(LIFEXP_DATA_DIR) / "geocode.csv";
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

std::vector<ConsistencyRule> configured_rules(const PipelineConfig& config) {
  if (!config.rules.empty()) return load_rules_file(config.rules);
  if (config.inline_rules) return *config.inline_rules;
  return default_consistency_rules();
}

PreprocessResult preprocess(const Table& raw, const PipelineConfig& config, const GeoLookup& lookup,
                            const std::vector<ConsistencyRule>& rules) {
  PreprocessResult r;
  r.raw = raw;
  r.renamed = run_stage("rename", [&] { return rename_columns(raw, config.rename); });
  auto sparse = run_stage("drop_sparse_features",
                          [&] { return drop_sparse_features(r.renamed, config.missing_fraction); });
  r.sparse_dropped = sparse.table;
  r.complete = run_stage("drop_incomplete_rows", [&] { return drop_incomplete_rows(r.sparse_dropped); });
  auto applied = run_stage("consistency_rules", [&] { return apply_consistency_rules(r.complete, rules); });
  r.consistent = applied.table;
  Table geo = run_stage("geocode", [&] { return geocode_countries(r.consistent, lookup); });
  r.clean = run_stage("one_hot", [&] {
    Table t = geo;
    for (const auto& col : config.one_hot) t = one_hot(t, col);
    return t;
  });
  run_stage("build_dataset", [&] { return build_dataset(r.clean, config.target); });

  json per_rule = json::array();
  for (const auto& o : applied.report.per_rule)
    per_rule.push_back({{"rule", o.rule}, {"violations", o.violations}, {"removed", o.removed}});
  r.fragment = {
      {"stages", json::array({stage_shape("load", r.raw), stage_shape("rename", r.renamed),
                              stage_shape("drop_sparse_features", r.sparse_dropped),
                              stage_shape("drop_incomplete_rows", r.complete),
                              stage_shape("consistency_rules", r.consistent), stage_shape("geocode", geo),
                              stage_shape("one_hot", r.clean)})},
      {"missing_fraction", config.missing_fraction},
      {"dropped_features", sparse.dropped},
      {"rules",
       {{"rows_before", applied.report.rows_before},
        {"rows_after", applied.report.rows_after},
        {"per_rule", per_rule}}},
      {"geocode_entries", lookup.size()},
      {"columns", r.clean.column_names()},
      {"target", config.target},
  };
  return r;
}

json explore_fragment(const Dataset& clean, const Table& consistent, const PipelineConfig& config) {
  json frag;
  json hists = json::object();
  for (std::size_t j = 0; j < clean.n_features(); ++j) {
    const Histogram h = histogram(clean.features.column(j), config.histogram_bins);
    hists[clean.feature_names[j]] = {{"bin_edges", h.bin_edges}, {"counts", h.counts}};
  }
  frag["histograms"] = hists;
  const Histogram th = histogram(clean.target, config.histogram_bins);
  frag["target_histogram"] = {{"name", clean.target_name}, {"bin_edges", th.bin_edges}, {"counts", th.counts}};

  const CorrelationMatrix features = correlation_matrix(clean, false);
  frag["correlation_features"] = {
      {"names", features.names}, {"r", matrix_rows(features.r)}, {"zero_variance", features.zero_variance}};
  const CorrelationMatrix with_target = correlation_matrix(clean, true);
  Vector r_target;
  const std::size_t t = with_target.names.size() - 1;
  for (std::size_t j = 0; j < t; ++j) r_target.push_back(with_target.r(j, t));
  frag["correlation_target"] = {{"target", clean.target_name},
                                {"names", clean.feature_names},
                                {"r", r_target},
                                {"zero_variance", with_target.zero_variance}};

  json anova = json::array();
  for (const auto& spec : config.anova) {
    const auto colon = spec.find(':');
    const std::string numeric = spec.substr(0, colon), categorical = spec.substr(colon + 1);
    const auto groups = group_by_category(consistent, numeric, categorical);
    const AnovaResult a = anova_oneway(groups);
    json sizes = json::array();
    for (const auto& g : groups) sizes.push_back(g.size());
    anova.push_back({{"numeric", numeric},
                     {"categorical", categorical},
                     {"f", finite_or_null(a.f)},
                     {"f_infinite", std::isinf(a.f)},
                     {"p", a.p},
                     {"df_between", a.df_between},
                     {"df_within", a.df_within},
                     {"group_sizes", sizes}});
  }
  frag["anova"] = anova;
  return frag;
}

json cluster_fragment(const Dataset& clean, const PipelineConfig& config) {
  ClusterSelectionOptions opts;
  opts.k_min = config.k_min;
  opts.k_max = std::min(config.k_max, clean.n_samples());
  opts.seed = config.seed;
  opts.kmeans.seed = config.seed;
  opts.threads = config.threads;
  if (opts.k_min > opts.k_max) throw ConfigError("cluster: k_min exceeds the number of samples");
  const ClusterSelectionReport rep = select_clustering(clean.features, opts);

  auto record = [](const ClusterConfigRecord& r) {
    return json{{"scaler", to_string(r.scaler)},
                {"algorithm", to_string(r.algorithm)},
                {"k", r.k},
                {"silhouette", r.silhouette}};
  };
  json records = json::array();
  for (const auto& r : rep.records) records.push_back(record(r));
  json curve = json::array();
  for (const auto& [k, s] : rep.silhouette_curve) curve.push_back({{"k", k}, {"silhouette", s}});

  const Matrix scaled = transform(fit_scaler(rep.winner.scaler, clean.features), clean.features);
  const std::size_t m = std::min<std::size_t>(2, clean.n_features());
  json pca = nullptr;
  if (m > 0) {
    const PcaModel model = pca_fit(scaled, m);
    Vector ratio;
    for (double v : model.explained_variance)
      ratio.push_back(model.total_variance > 0 ? v / model.total_variance : 0.0);
    pca = {{"components", m},
           {"scaler", to_string(rep.winner.scaler)},
           {"explained_variance", model.explained_variance},
           {"explained_variance_ratio", ratio},
           {"projection", matrix_rows(pca_transform(model, scaled))},
           {"labels", rep.winner_labels}};
  }
  std::vector<std::size_t> sizes(rep.winner.k, 0);
  for (std::size_t l : rep.winner_labels) ++sizes[l];
  return {{"k_min", opts.k_min},
          {"k_max", opts.k_max},
          {"seed", opts.seed},
          {"records", records},
          {"winner", record(rep.winner)},
          {"cluster_sizes", sizes},
          {"silhouette_curve", curve},
          {"pca", pca}};
}

namespace {

json predictions_json(const Vector& actual, const Vector& predicted) {
  return {{"actual", actual}, {"predicted", predicted}};
}

json grid_json(const GridResult& g, const ParamGrid& grid) {
  json cands = json::array();
  for (const auto& c : g.candidates)
    cands.push_back({{"params", c.params}, {"fold_r2", c.fold_r2}, {"mean_r2", c.mean_r2}});
  return {{"axes", grid_to_json(grid)}, {"candidates", cands}, {"best_index", g.best}};
}

json timing_json(const TimingReport& fit, const TimingReport& pred, const char* fit_key) {
  return {{fit_key, fit.fit_seconds},
          {"predict_seconds_total", pred.predict_seconds_total},
          {"predict_seconds_per_sample", pred.predict_seconds_per_sample},
          {"fit_repeats", fit.repeats},
          {"predict_repeats", pred.repeats}};
}

}  // namespace

TrainOutput train_models(const Dataset& clean, const PipelineConfig& config, const std::vector<ModelKind>& kinds,
                         const json& tree_best_params) {
  const SplitIndices split =
      train_test_split(clean.n_samples(), config.split_ratio, derive_seed(config.seed, kSplitStream));
  Dataset train = clean.subset(split.train);
  Dataset test = clean.subset(split.test);
  const Scaler scaler = fit_scaler(ScalerKind::MaxAbs, train.features);
  train.features = transform(scaler, train.features);
  test.features = transform(scaler, test.features);

  TrainOutput out;
  out.models["split"] = {{"ratio", config.split_ratio},
                         {"n_train", train.n_samples()},
                         {"n_test", test.n_samples()},
                         {"feature_scaler", "maxabs"},
                         {"features", clean.feature_names}};

  auto metrics_pair = [&](const FittedModel& m) {
    return json{{"train", metrics_json(compute_metrics(train.target, predict(m, train.features)))},
                {"test", metrics_json(compute_metrics(test.target, predict(m, test.features)))}};
  };
  auto predict_timing = [&](const FittedModel& m) {
    return time_predict([&] { (void)predict(m, test.features); }, test.n_samples(), config.timing_repeats);
  };
  GridSearchOptions gopts;
  gopts.folds = config.cv_folds;
  gopts.seed = derive_seed(config.seed, kCvStream);
  gopts.threads = 1;  // timed runs stay single-threaded

  json tree_params = tree_best_params;
  for (ModelKind kind : kinds) {
    if (kind == ModelKind::Linear) {
      FittedModel fitted = fit_linear_model(train);
      const TimingReport fit_t = time_fit([&] { (void)fit_linear_model(train); }, config.timing_repeats);
      const auto& lm = std::get<LinearModel>(fitted);
      json coefs = json::array();
      for (std::size_t i = 0; i < lm.ols.coefficients.size(); ++i)
        coefs.push_back({{"name", i == 0 ? std::string("(intercept)") : lm.ols.feature_names[i - 1]},
                         {"coefficient", lm.ols.coefficients[i]},
                         {"standard_error", lm.ols.standard_errors[i]},
                         {"t_stat", finite_or_null(lm.ols.t_stats[i])},
                         {"p_value", lm.ols.p_values[i]}});
      const Vector pred = predict(fitted, test.features);
      out.models["lr"] = {{"params", json::object()},
                          {"dropped_features", lm.dropped_features},
                          {"coefficients", coefs},
                          {"significance_alpha", config.alpha},
                          {"significant_features", ols_significant_features(lm.ols, config.alpha)},
                          {"residual_variance", lm.ols.residual_variance},
                          {"dof", lm.ols.dof},
                          {"metrics", metrics_pair(fitted)},
                          {"test_predictions", predictions_json(test.target, pred)}};
      out.timings["lr"] = timing_json(fit_t, predict_timing(fitted), "fit_seconds");
    } else if (kind == ModelKind::Tree) {
      GridResult g;
      const TimingReport fit_t =
          time_fit([&] { g = grid_search(train, ModelKind::Tree, config.tree_grid, gopts); }, 1);
      const auto& tree = std::get<RegressionTree>(g.model);
      const TreeRendering rendering = tree_render(tree, config.tree_render_depth, train.feature_names);
      tree_params = to_json(tree_params_from_json(g.best_params));
      out.models["tree"] = {{"grid", grid_json(g, config.tree_grid)},
                            {"best_params", tree_params},
                            {"metrics", metrics_pair(g.model)},
                            {"importances", named_values(train.feature_names, tree_importances(tree), "importance")},
                            {"leaf_count", tree.leaf_count()},
                            {"depth", tree.depth()},
                            {"rendering", {{"max_depth", config.tree_render_depth},
                                           {"text", rendering.text},
                                           {"dot", rendering.dot}}},
                            {"tree", to_json(tree)},
                            {"test_predictions", predictions_json(test.target, predict(g.model, test.features))}};
      out.timings["tree"] = timing_json(fit_t, predict_timing(g.model), "grid_search_seconds");
    } else {
      if (!tree_params.is_object())
        throw Error("forest inherits the tuned tree parameters; run `lifexp train --model tree` first");
      GridSearchOptions fopts = gopts;
      fopts.base_params = tree_params;
      fopts.base_params["seed"] = derive_seed(config.seed, kForestStream);
      GridResult g;
      const TimingReport fit_t =
          time_fit([&] { g = grid_search(train, ModelKind::Forest, config.forest_grid, fopts); }, 1);
      const auto& forest = std::get<Forest>(g.model);
      out.models["forest"] = {
          {"grid", grid_json(g, config.forest_grid)},
          {"inherited_tree_params", tree_params},
          {"best_params", to_json(forest_params_from_json(g.best_params))},
          {"metrics", metrics_pair(g.model)},
          {"importances", named_values(train.feature_names, forest_importances(forest), "importance")},
          {"test_predictions", predictions_json(test.target, predict(g.model, test.features))}};
      out.timings["forest"] = timing_json(fit_t, predict_timing(g.model), "grid_search_seconds");
    }
  }
  return out;
}

void cmd_preprocess(const PipelineConfig& config) {
  config.validate();
  const GeoLookup lookup = run_stage("load_geocode", [&] { return GeoLookup::read_file(config.geocode); });
  const auto rules = run_stage("load_rules", [&] { return configured_rules(config); });
  const Table raw = run_stage("load", [&] { return read_csv_file(config.input); });
  const PreprocessResult r = preprocess(raw, config, lookup, rules);

  fs::create_directories(config.out);
  write_table(consistent_path(config), r.consistent);
  write_table(clean_path(config), r.clean);
  const json cfg = config.to_json();
  RunReport report;
  report["meta"] = {{"tool", "lifexp"},
                    {"version", "1.0.0"},
                    {"seed", config.seed},
                    {"config", cfg},
                    {"config_digest", fnv1a_hex(emit_json(cfg))}};
  report["preprocess"] = r.fragment;
  emit_report(report, report_path(config));
  save_timings(config, json{{"started_at", utc_now()}});
}

void cmd_explore(const PipelineConfig& config) {
  config.validate();
  RunReport report = load_existing_report(config);
  const Dataset clean = load_clean(config);
  require(consistent_path(config), "preprocess");
  const Table consistent = read_csv_file(consistent_path(config));
  report["explore"] = run_stage("explore", [&] { return explore_fragment(clean, consistent, config); });
  emit_report(report, report_path(config));
}

void cmd_cluster(const PipelineConfig& config) {
  config.validate();
  RunReport report = load_existing_report(config);
  const Dataset clean = load_clean(config);
  report["cluster"] = run_stage("cluster", [&] { return cluster_fragment(clean, config); });
  emit_report(report, report_path(config));
}

void cmd_train(const PipelineConfig& config, const std::string& model) {
  config.validate();
  std::vector<ModelKind> kinds;
  if (model == "all")
    kinds = {ModelKind::Linear, ModelKind::Tree, ModelKind::Forest};
  else
    kinds = {model_kind_from_string(model)};
  RunReport report = load_existing_report(config);
  const Dataset clean = load_clean(config);
  json tree_params = nullptr;
  if (report.contains("models") && report["models"].contains("tree"))
    tree_params = report["models"]["tree"]["best_params"];
  const TrainOutput trained = run_stage("train", [&] { return train_models(clean, config, kinds, tree_params); });

  json& models = report["models"];
  if (!models.is_object()) models = json::object();
  models.update(trained.models);
  json comparison = json::array();
  for (const char* key : {"lr", "tree", "forest"}) {
    if (!models.contains(key)) continue;
    json row = models[key]["metrics"]["test"];
    row["model"] = key;
    comparison.push_back(row);
  }
  models["comparison"] = comparison;
  emit_report(report, report_path(config));

  json timings = load_timings(config);
  for (const auto& [k, v] : trained.timings.items()) timings[k] = v;
  save_timings(config, timings);
}

void cmd_report(const PipelineConfig& config) {
  config.validate();
  const RunReport report = load_existing_report(config);
  const auto files = run_stage("report", [&] { return standard_chart_suite(report); });
  for (const auto& [name, text] : files) write_text(config.out / name, text);
}

void cmd_pipeline(const PipelineConfig& config) {
  cmd_preprocess(config);
  cmd_explore(config);
  cmd_cluster(config);
  cmd_train(config, "all");
  cmd_report(config);
}

}  // namespace lifexp

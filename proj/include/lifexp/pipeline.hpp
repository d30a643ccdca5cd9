#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifexp/evaluation.hpp"
#include "lifexp/reporting.hpp"
#include "lifexp/tabular.hpp"

namespace lifexp {

/// Settings for a full study run. Every field has a JSON key of the same
/// name; see config/example.json.
struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path geocode;
  std::filesystem::path rules;                            // empty: inline or default rules
  std::optional<std::vector<ConsistencyRule>> inline_rules;
  std::map<std::string, std::string> rename = who_rename_map();
  std::vector<std::string> one_hot{"status"};
  double missing_fraction = 0.05;
  std::string target = "life_expectancy";
  double split_ratio = 0.7;
  std::uint64_t seed = 42;
  std::size_t k_min = 1;
  std::size_t k_max = 50;
  std::size_t cv_folds = 5;
  std::size_t histogram_bins = 20;
  std::vector<std::string> anova{"life_expectancy:status"};
  double alpha = 0.05;
  std::size_t tree_render_depth = 3;
  std::size_t timing_repeats = 3;
  ParamGrid tree_grid = default_tree_grid();
  ParamGrid forest_grid = default_forest_grid();
  std::filesystem::path out = "out";
  std::size_t threads = 0;  // 0: hardware concurrency

  static ParamGrid default_tree_grid();
  static ParamGrid default_forest_grid();

  void validate() const;
  /// Settings that influence results. `out` and `threads` are left out
  /// because they do not change any output byte.
  nlohmann::json to_json() const;
};

/// Applies the keys present in `doc` on top of `base`. Relative paths are
/// resolved against `base_dir`.
PipelineConfig config_from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir,
                                PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Tables at each preprocessing stage plus the report fragment.
struct PreprocessResult {
  Table raw;
  Table renamed;
  Table sparse_dropped;
  Table complete;
  Table consistent;
  Table clean;
  nlohmann::json fragment;
};

PreprocessResult preprocess(const Table& raw, const PipelineConfig& config, const GeoLookup& lookup,
                            const std::vector<ConsistencyRule>& rules);

/// Rule set selected by the config: file, inline list, or the default set.
std::vector<ConsistencyRule> configured_rules(const PipelineConfig& config);

nlohmann::json explore_fragment(const Dataset& clean, const Table& consistent, const PipelineConfig& config);
nlohmann::json cluster_fragment(const Dataset& clean, const PipelineConfig& config);

/// Model blocks for the requested kinds, plus their timings. The forest
/// inherits tree parameters from `tree_best_params`.
struct TrainOutput {
  nlohmann::json models = nlohmann::json::object();
  nlohmann::json timings = nlohmann::json::object();
};
TrainOutput train_models(const Dataset& clean, const PipelineConfig& config, const std::vector<ModelKind>& kinds,
                         const nlohmann::json& tree_best_params);

// Subcommands. Each reads its inputs from config.out (or config.input),
// updates report.json there, and throws on any failure.
void cmd_preprocess(const PipelineConfig& config);
void cmd_explore(const PipelineConfig& config);
void cmd_cluster(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config, const std::string& model);
void cmd_report(const PipelineConfig& config);
void cmd_pipeline(const PipelineConfig& config);

}  // namespace lifexp

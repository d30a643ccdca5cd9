// lifexp: command-line front end for the life-expectancy study pipeline.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lifexp/errors.hpp"
#include "lifexp/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Flags {
  std::string config;
  std::string model = "all";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> input, out, geocode, rules, target, tree_grid, forest_grid;
  std::optional<double> missing_fraction, split_ratio, alpha;
  std::optional<std::size_t> k_min, k_max, cv_folds, histogram_bins, threads, timing_repeats;
  std::vector<std::string> anova;
};

// Flags sit on top of the file, which sits on top of the defaults.
ordered_json overrides(const Flags& f) {
  ordered_json doc = ordered_json::object();
  auto path = [](const std::string& p) { return fs::absolute(p).lexically_normal().string(); };
  if (f.input) doc["input"] = path(*f.input);
  if (f.out) doc["out"] = path(*f.out);
  if (f.geocode) doc["geocode"] = path(*f.geocode);
  if (f.rules) doc["rules"] = path(*f.rules);
  if (f.target) doc["target"] = *f.target;
  if (f.seed) doc["seed"] = *f.seed;
  if (f.missing_fraction) doc["missing_fraction"] = *f.missing_fraction;
  if (f.split_ratio) doc["split_ratio"] = *f.split_ratio;
  if (f.alpha) doc["alpha"] = *f.alpha;
  if (f.k_min) doc["k_min"] = *f.k_min;
  if (f.k_max) doc["k_max"] = *f.k_max;
  if (f.cv_folds) doc["cv_folds"] = *f.cv_folds;
  if (f.histogram_bins) doc["histogram_bins"] = *f.histogram_bins;
  if (f.threads) doc["threads"] = *f.threads;
  if (f.timing_repeats) doc["timing_repeats"] = *f.timing_repeats;
  if (!f.anova.empty()) doc["anova"] = f.anova;
  try {
    if (f.tree_grid) doc["tree_grid"] = ordered_json::parse(*f.tree_grid);
    if (f.forest_grid) doc["forest_grid"] = ordered_json::parse(*f.forest_grid);
  } catch (const nlohmann::json::exception& e) {
    throw lifexp::ConfigError(std::string("grid flag is not valid JSON: ") + e.what());
  }
  return doc;
}

lifexp::PipelineConfig resolve(const Flags& f) {
  lifexp::PipelineConfig base;
  if (!f.config.empty()) base = lifexp::load_config(f.config);
  return lifexp::config_from_json(overrides(f), {}, base);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Life-expectancy study pipeline"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--input", flags.input, "raw CSV");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--geocode", flags.geocode, "country,latitude,longitude CSV");
    cmd->add_option("--rules", flags.rules, "consistency rule file (JSON)");
    cmd->add_option("--target", flags.target, "target column");
    cmd->add_option("--missing_fraction", flags.missing_fraction, "sparse-feature threshold");
    cmd->add_option("--split_ratio", flags.split_ratio, "training fraction");
    cmd->add_option("--alpha", flags.alpha, "significance level for the OLS feature list");
    cmd->add_option("--k_min", flags.k_min, "smallest cluster count");
    cmd->add_option("--k_max", flags.k_max, "largest cluster count");
    cmd->add_option("--cv_folds", flags.cv_folds, "cross-validation folds");
    cmd->add_option("--histogram_bins", flags.histogram_bins, "bins per histogram");
    cmd->add_option("--threads", flags.threads, "worker threads, 0 for all cores");
    cmd->add_option("--timing_repeats", flags.timing_repeats, "repeats per timed fit");
    cmd->add_option("--tree_grid", flags.tree_grid, "regression tree grid as JSON");
    cmd->add_option("--forest_grid", flags.forest_grid, "random forest grid as JSON");
    cmd->add_option("--anova", flags.anova, "numeric:categorical pair, repeatable");
  };

  auto* preprocess = app.add_subcommand("preprocess", "clean the raw CSV");
  auto* explore = app.add_subcommand("explore", "histograms, correlations, ANOVA");
  auto* cluster = app.add_subcommand("cluster", "scaler/algorithm/k sweep and PCA");
  auto* train = app.add_subcommand("train", "fit and evaluate models");
  auto* report = app.add_subcommand("report", "render charts from report.json");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage");
  for (auto* cmd : {preprocess, explore, cluster, train, report, pipeline}) add_common(cmd);
  train->add_option("--model", flags.model, "lr, tree, forest or all")
      ->check(CLI::IsMember({"lr", "tree", "forest", "all"}));

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    const lifexp::PipelineConfig config = resolve(flags);
    if (stage == "preprocess") lifexp::cmd_preprocess(config);
    else if (stage == "explore") lifexp::cmd_explore(config);
    else if (stage == "cluster") lifexp::cmd_cluster(config);
    else if (stage == "train") lifexp::cmd_train(config, flags.model);
    else if (stage == "report") lifexp::cmd_report(config);
    else lifexp::cmd_pipeline(config);
  } catch (const std::exception& e) {
    std::cerr << "lifexp " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

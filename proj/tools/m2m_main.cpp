#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "m2m/attentive.hpp"
#include "m2m/csv.hpp"
#include "m2m/datamodel.hpp"
#include "m2m/errors.hpp"
#include "m2m/explain.hpp"
#include "m2m/harness.hpp"
#include "m2m/impute.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SynthArgs {
  std::string out_dir = "synth_out";
  int rows = 200;
  std::uint64_t seed = 0;
  double rate = 0.3;
  double noise_sd = 0.1;
  std::string mode = "block";
  std::string schema_path;
};

int run_synth(const SynthArgs& args) {
  m2m::DatasetSchema schema = args.schema_path.empty()
                                  ? m2m::default_synthetic_schema()
                                  : m2m::load_schema(args.schema_path);
  m2m::SyntheticConfig config;
  config.missingness_rate = args.rate;
  config.noise_sd = args.noise_sd;
  if (args.mode == "block") config.mode = m2m::MissingnessMode::block;
  else if (args.mode == "cellwise") config.mode = m2m::MissingnessMode::cellwise;
  else if (args.mode == "twin") config.mode = m2m::MissingnessMode::block_twin;
  else m2m::contract_fail("InvalidRate", "mode must be block, cellwise or twin");
  config.n_targets = static_cast<int>(schema.target_names.size());
  config.n_confounders = static_cast<int>(schema.confounder_names.size());

  const m2m::SyntheticData data = m2m::generate_synthetic(args.rows, schema, config, args.seed);
  fs::create_directories(args.out_dir);
  m2m::save_schema(schema, args.out_dir + "/schema.json");
  m2m::save_dataset(data.dataset, args.out_dir + "/features.csv");
  m2m::save_targets(data.targets, data.dataset.row_ids, args.out_dir + "/targets.csv");
  m2m::save_confounders(data.confounders, data.dataset.row_ids, args.out_dir + "/confounders.csv");

  json truth;
  truth["seed"] = data.truth.seed;
  truth["noise_sd"] = data.truth.noise_sd;
  truth["missingness_rate"] = data.truth.missingness_rate;
  truth["weights"] = json::array();
  for (Eigen::Index i = 0; i < data.truth.weights.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < data.truth.weights.cols(); ++j) {
      row.push_back(data.truth.weights(i, j));
    }
    truth["weights"].push_back(std::move(row));
  }
  std::ofstream out(args.out_dir + "/truth.json");
  out << truth.dump(2) << "\n";
  std::cout << "wrote synthetic dataset (" << args.rows << " rows) to " << args.out_dir << "\n";
  return 0;
}

m2m::LoadedTables load_from_config(const m2m::RunConfig& config) {
  return m2m::load_joined(config.features_path, config.targets_path, config.confounders_path,
                          config.schema_path);
}

m2m::CvScenario scenario_from_config(const m2m::RunConfig& config,
                                     const m2m::DatasetSchema& schema) {
  m2m::CvScenario scenario;
  scenario.kind = config.scenario;
  scenario.test_ids = config.test_ids;
  scenario.test_size = config.test_size;
  scenario.seed = config.seed;
  scenario.residualize = config.residualize;
  scenario.imputers = m2m::ImputerPlan::resolve(config.imputers_doc, schema);
  scenario.model = m2m::ModelSpec::from_json(config.predictor_doc);
  return scenario;
}

int run_select_imputer(const std::string& config_path) {
  const m2m::RunConfig config = m2m::RunConfig::load(config_path);
  const m2m::LoadedTables tables = load_from_config(config);
  std::vector<m2m::ImputerSpec> candidates;
  if (config.raw.contains("imputer_candidates")) {
    for (const auto& doc : config.raw["imputer_candidates"]) {
      candidates.push_back(m2m::ImputerSpec::from_json(doc));
    }
  } else {
    candidates = m2m::default_imputer_catalog();
  }
  const auto report =
      m2m::select_imputer(candidates, tables.features, config.bins, config.eps);
  fs::create_directories(config.output_dir);
  m2m::write_selection_csv(report, tables.features.schema, config.output_dir + "/selection.csv");
  for (const auto& row : report.rows) {
    if (row.chosen) {
      std::cout << row.modality << ": " << row.spec.label() << " (KL " << row.kl_sum << ")\n";
    }
  }
  return 0;
}

int run_train(const std::string& config_path) {
  const m2m::RunConfig config = m2m::RunConfig::load(config_path);
  const m2m::LoadedTables tables = load_from_config(config);
  const auto plan = m2m::ImputerPlan::resolve(config.imputers_doc, tables.features.schema);
  const auto spec = m2m::ModelSpec::from_json(config.predictor_doc);
  const m2m::PipelineModel model = m2m::train_pipeline(
      tables.features, tables.targets, tables.confounders, plan, spec, config.residualize);
  fs::create_directories(config.output_dir);
  std::ofstream out(config.output_dir + "/model.json");
  out << model.to_json(tables.features.schema).dump(2) << "\n";
  std::cout << "trained " << spec.label() << " on " << tables.features.n_rows() << " rows\n";
  return 0;
}

int run_evaluate(const std::string& config_path, bool inject_leakage) {
  const m2m::RunConfig config = m2m::RunConfig::load(config_path);
  const m2m::LoadedTables tables = load_from_config(config);
  m2m::CvScenario scenario = scenario_from_config(config, tables.features.schema);
  scenario.inject_test_into_imputer = inject_leakage;
  m2m::RunReport report =
      m2m::run_scenario(tables.features, tables.targets, tables.confounders, scenario);
  report.config_hash = config.hash();
  fs::create_directories(config.output_dir);
  m2m::write_report_csv(report, config.output_dir + "/report.csv");
  const auto& row = report.rows.front();
  std::cout << to_string(scenario.kind) << ": mean r " << row.r_mean << ", mean MAE "
            << row.mae_mean << " over " << row.folds << " fold(s)\n";
  return 0;
}

int run_compare(const std::string& config_path) {
  const m2m::RunConfig config = m2m::RunConfig::load(config_path);
  m2m::require(!config.catalog.empty(), "EmptyCatalog",
               "compare needs a non-empty 'catalog' in the config");
  const m2m::LoadedTables tables = load_from_config(config);
  m2m::CvScenario base;
  base.kind = config.scenario;
  base.test_ids = config.test_ids;
  base.test_size = config.test_size;
  base.seed = config.seed;
  base.residualize = config.residualize;
  m2m::CompareOptions options;
  options.unimodal = config.unimodal;
  options.sort_by_mae = config.sort_by_mae;
  options.config_hash = config.hash();
  const m2m::RunReport report = m2m::compare_models(tables.features, tables.targets,
                                                    tables.confounders, config.catalog, base,
                                                    options);
  fs::create_directories(config.output_dir);
  m2m::write_report_csv(report, config.output_dir + "/report.csv");
  std::cout << "compared " << config.catalog.size() << " pairs; " << report.rows.size()
            << " report rows\n";
  return 0;
}

int run_explain(const std::string& config_path, const std::string& model_path,
                const std::string& method, const std::string& atlas_path,
                const std::vector<std::string>& shapley_features,
                const std::string& mask_variant) {
  const m2m::RunConfig config = m2m::RunConfig::load(config_path);
  const m2m::LoadedTables tables = load_from_config(config);

  std::ifstream in(model_path);
  if (!in) m2m::contract_fail("FileNotFound", "cannot open " + model_path);
  json doc;
  in >> doc;
  const m2m::PipelineModel model = m2m::PipelineModel::from_json(doc, tables.features.schema);

  // Deterministic re-completion with the stored plan.
  const m2m::FittedImputer imputer = m2m::FittedImputer::fit(model.plan, tables.features);
  const m2m::CompletedDataset completed = imputer.impute(tables.features);
  const Eigen::MatrixXd& x = completed.data.values;
  const std::vector<std::string> feature_names = tables.features.schema.flat_feature_names();

  fs::create_directories(config.output_dir);
  m2m::ImportanceReport report;

  if (method == "permutation") {
    const m2m::PredictFn fn = m2m::pipeline_predict_fn(model, tables.confounders.values);
    report = m2m::permutation_importance(fn, x, tables.targets.values, feature_names,
                                         tables.targets.target_names, config.importance_repeats,
                                         config.seed);
  } else if (method == "shapley") {
    std::vector<int> subset;
    if (shapley_features.empty()) {
      m2m::require(x.cols() <= 15, "TooManyFeatures",
                   "pass --features to pick at most 15 features to explain");
      for (int j = 0; j < x.cols(); ++j) subset.push_back(j);
    } else {
      for (const auto& name : shapley_features) {
        const auto it = std::find(feature_names.begin(), feature_names.end(), name);
        m2m::require(it != feature_names.end(), "UnknownColumn",
                     "feature '" + name + "' not in the schema");
        subset.push_back(static_cast<int>(it - feature_names.begin()));
      }
    }
    const Eigen::RowVectorXd background = x.colwise().mean();
    Eigen::MatrixXd phi_sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(subset.size()),
                                                    tables.targets.n_targets());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const m2m::PredictFn fn =
          m2m::pipeline_predict_fn(model, tables.confounders.values.row(i));
      const auto shap = m2m::shapley_exact(fn, x.row(i), background, subset);
      phi_sum += shap.phi;
    }
    report.method = m2m::ImportanceMethod::shapley;
    report.target_names = tables.targets.target_names;
    for (int j : subset) report.feature_names.push_back(feature_names[static_cast<std::size_t>(j)]);
    report.per_target = phi_sum / static_cast<double>(x.rows());
    report.mean_score = report.per_target.rowwise().mean();
    report.mean_r_first = report.mean_score;
    report.repeats = static_cast<int>(x.rows());
    report.seed = config.seed;
  } else if (method == "mask") {
    m2m::require(model.predictor.attentive.has_value(), "InvalidHyperparameter",
                 "mask importance needs an attentive model");
    Eigen::MatrixXd eps = x;
    if (model.residualize) {
      eps = m2m::residualize(x, tables.confounders.values, model.coefs.gamma_hat);
    }
    m2m::ForwardTrace trace;
    model.predictor.attentive->predict_traced(eps, &trace);
    const auto variant = mask_variant == "paper" ? m2m::MaskAggregate::paper
                                                 : m2m::MaskAggregate::normalized;
    const Eigen::MatrixXd agg = m2m::aggregate_masks(trace.masks, trace.etas, variant);
    report.method = m2m::ImportanceMethod::mask;
    report.feature_names = feature_names;
    report.per_target.resize(static_cast<Eigen::Index>(feature_names.size()), 0);
    report.mean_score = agg.colwise().mean().transpose();
    report.mean_r_first = report.mean_score;
    report.repeats = static_cast<int>(x.rows());
    report.seed = config.seed;
  } else {
    m2m::contract_fail("InvalidHyperparameter",
                       "method must be permutation, shapley or mask");
  }

  m2m::write_importance_csv(report, config.output_dir + "/importance.csv",
                            config.verbose_importance);
  if (!atlas_path.empty()) {
    const m2m::RegionTable table = m2m::region_importance_table(report, atlas_path);
    m2m::write_region_csv(table, config.output_dir + "/regions.csv");
  }
  std::cout << "wrote importance.csv (" << report.feature_names.size() << " features, method "
            << to_string(report.method) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"many-to-many multimodal prediction with imputer selection and explanations"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
  synth->add_option("--out", synth_args.out_dir, "output directory");
  synth->add_option("--rows", synth_args.rows, "number of rows");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--rate", synth_args.rate, "missingness rate in [0,1)");
  synth->add_option("--noise", synth_args.noise_sd, "target noise sd");
  synth->add_option("--mode", synth_args.mode, "block | cellwise | twin");
  synth->add_option("--schema", synth_args.schema_path, "schema JSON (optional)");

  std::string config_path;
  auto* select = app.add_subcommand("select-imputer", "score imputer candidates by KL divergence");
  select->add_option("--config", config_path, "run config JSON")->required();

  auto* train = app.add_subcommand("train", "fit the full pipeline and save model.json");
  train->add_option("--config", config_path, "run config JSON")->required();

  bool inject_leakage = false;
  auto* evaluate = app.add_subcommand("evaluate", "run the configured cross-validation scenario");
  evaluate->add_option("--config", config_path, "run config JSON")->required();
  evaluate->add_flag("--inject-leakage", inject_leakage,
                     "audit self-test: feed test rows to the imputer fit");

  auto* compare = app.add_subcommand("compare", "run every (imputer, predictor) catalog pair");
  compare->add_option("--config", config_path, "run config JSON")->required();

  std::string model_path, method = "permutation", atlas_path, mask_variant = "normalized";
  std::vector<std::string> shapley_features;
  auto* explain = app.add_subcommand("explain", "feature importance for a trained pipeline");
  explain->add_option("--config", config_path, "run config JSON")->required();
  explain->add_option("--model", model_path, "model.json from 'train'")->required();
  explain->add_option("--method", method, "permutation | shapley | mask");
  explain->add_option("--atlas", atlas_path, "feature,region,network CSV for the region table");
  explain->add_option("--features", shapley_features, "features to explain (shapley)");
  explain->add_option("--mask-variant", mask_variant, "normalized | paper");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (select->parsed()) return run_select_imputer(config_path);
    if (train->parsed()) return run_train(config_path);
    if (evaluate->parsed()) return run_evaluate(config_path, inject_leakage);
    if (compare->parsed()) return run_compare(config_path);
    if (explain->parsed()) {
      return run_explain(config_path, model_path, method, atlas_path, shapley_features,
                         mask_variant);
    }
  } catch (const m2m::LeakageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const m2m::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "m2m/attentive.hpp"
#include "m2m/datamodel.hpp"
#include "m2m/explain.hpp"
#include "m2m/impute.hpp"
#include "m2m/predict.hpp"
#include "m2m/residual.hpp"

namespace m2m {

enum class ScenarioKind { train_test, loco, lomo };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& text);

// Unified predictor specification across the linear family and the attentive
// network.
struct ModelSpec {
  enum class Kind { linear, multitask_en, pls, attentive };
  Kind kind = Kind::linear;
  PredictorConfig predictor;   // linear / multitask_en / pls
  AttentiveConfig attentive;   // attentive

  std::string label() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& doc);
};

// Fitted counterpart of ModelSpec with the uniform predict contract.
struct TrainedPredictor {
  std::optional<PredictorModel> linear_like;
  std::optional<AttentiveModel> attentive;

  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
  PredictFn as_fn() const;
};

TrainedPredictor fit_model(const ModelSpec& spec, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& y);

struct CvScenario {
  ScenarioKind kind = ScenarioKind::train_test;
  std::vector<std::string> test_ids;  // sampled from the seed when empty
  int test_size = 0;
  std::uint64_t seed = 0;
  ImputerPlan imputers;
  ModelSpec model;
  bool residualize = true;
  // Verification hook: feeds the fold's test rows to the imputer fit so the
  // audit must fire.
  bool inject_test_into_imputer = false;
  // Unimodal slices reuse test ids chosen against the full dataset, where the
  // complete/incomplete contract was already enforced.
  bool skip_test_id_validation = false;
};

struct LeakageAudit {
  struct Entry {
    int fold = 0;
    std::string stage;  // imputer-fit, standardize-fit, residualize-fit, predictor-fit, knn-neighbors
    std::vector<std::string> consumed_ids;
  };
  std::vector<Entry> entries;
  std::vector<std::string> violations;

  void record(int fold, const std::string& stage, const std::vector<std::string>& consumed_ids,
              const std::vector<std::string>& forbidden_ids);
};

struct RunReport {
  struct Row {
    std::string model, imputer, scenario, modality_scope;
    Eigen::VectorXd r_per_target;    // T
    Eigen::VectorXd mae_per_target;  // T
    double r_mean = 0.0, r_std = 0.0;      // row-wise across targets, sample std
    double mae_mean = 0.0, mae_std = 0.0;
    int folds = 0;
  };
  std::vector<Row> rows;
  std::vector<std::string> target_names;
  std::uint64_t seed = 0;
  std::string config_hash;
  LeakageAudit audit;
  // Concatenated out-of-fold predictions in test-id order, plus the resolved
  // test ids (after sampling); single-scenario runs only.
  Eigen::MatrixXd scenario_predictions;
  std::vector<std::string> resolved_test_ids;
};

// Samples or validates the scenario's test ids against the dataset.
std::vector<std::string> resolve_test_ids(const MultimodalDataset& dataset,
                                          const CvScenario& scenario);

// Runs one (imputer plan, model) pair under the scenario. Per fold: imputer,
// standardization, residualization and predictor all fit on that fold's
// training rows only; metrics come from the concatenated out-of-fold
// predictions. Throws LeakageError when the audit finds a violation.
RunReport run_scenario(const MultimodalDataset& dataset, const TargetMatrix& targets,
                       const ConfounderMatrix& confounders, const CvScenario& scenario);

struct CatalogEntry {
  nlohmann::json imputers_doc;  // resolved against the dataset schema at run time
  nlohmann::json model_doc;
};

struct CompareOptions {
  bool unimodal = false;            // add a best-unimodal row per entry
  bool sort_by_mae = false;         // default: descending mean r
  std::string config_hash;
};

// Every catalog pair under one shared fold layout; rows sorted by the table
// convention.
RunReport compare_models(const MultimodalDataset& dataset, const TargetMatrix& targets,
                         const ConfounderMatrix& confounders,
                         const std::vector<CatalogEntry>& catalog, const CvScenario& base,
                         const CompareOptions& options);

void write_report_csv(const RunReport& report, const std::string& path);

// ---- whole-pipeline bundle (train / explain CLI) ----------------------------

struct PipelineModel {
  ImputerPlan plan;
  bool residualize = true;
  ResidualizationCoefs coefs;  // meaningful when residualize
  ModelSpec spec;
  TrainedPredictor predictor;

  nlohmann::json to_json(const DatasetSchema& schema) const;
  static PipelineModel from_json(const nlohmann::json& doc, const DatasetSchema& schema);
};

PipelineModel train_pipeline(const MultimodalDataset& dataset, const TargetMatrix& targets,
                             const ConfounderMatrix& confounders, const ImputerPlan& plan,
                             const ModelSpec& spec, bool residualize);

// Prediction surface over completed features for the explainers: residualizes
// with the stored coefficients, predicts, reconstructs. Borrows the model;
// the caller keeps it alive while the function is in use.
PredictFn pipeline_predict_fn(const PipelineModel& model, const Eigen::MatrixXd& confounders);

// ---- run configuration -------------------------------------------------------

struct RunConfig {
  std::string features_path, schema_path, targets_path, confounders_path;
  std::string output_dir = ".";
  nlohmann::json imputers_doc;
  nlohmann::json predictor_doc;
  std::vector<CatalogEntry> catalog;
  ScenarioKind scenario = ScenarioKind::train_test;
  int test_size = 0;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  int bins = 50;
  double eps = 1e-9;
  bool residualize = true;
  bool unimodal = false;
  bool sort_by_mae = false;
  int importance_repeats = 10;
  bool verbose_importance = false;
  nlohmann::json raw;  // the document as loaded; hashed into reports

  static RunConfig load(const std::string& path);
  std::string hash() const;
};

}  // namespace m2m

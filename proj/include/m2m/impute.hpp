#pragma once

#include <Eigen/Dense>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <set>
#include <string>
#include <vector>

#include "m2m/datamodel.hpp"
#include "m2m/divergence.hpp"
#include "m2m/preprocess.hpp"

namespace m2m {

enum class ImputeMethod { mean, most_frequent, constant, knn, iterative };

std::string to_string(ImputeMethod method);
ImputeMethod impute_method_from_string(const std::string& text);

struct ImputerSpec {
  ImputeMethod method = ImputeMethod::mean;
  double constant_value = -1.0;  // constant
  int k = 1;                     // knn
  int max_rounds = 10;           // iterative
  double ridge_lambda = 1e-3;    // iterative
  // Experimental knn variant: divide squared distance by the co-observed count.
  bool normalized_distance = false;

  // mean/iterative fill continuous blocks, most_frequent/constant ordinal
  // blocks, knn either.
  bool applies_to(ModalityKind kind) const;
  std::string label() const;
  void validate() const;

  nlohmann::json to_json() const;
  static ImputerSpec from_json(const nlohmann::json& doc);
};

// One spec per modality id. Every modality that can have missing cells must
// be covered before impute() can promise a complete output.
struct ImputerPlan {
  std::map<int, ImputerSpec> by_modality;

  nlohmann::json to_json(const DatasetSchema& schema) const;
  // Accepts {"continuous": spec, "ordinal": spec} or {"modality:<name>": spec}.
  static ImputerPlan resolve(const nlohmann::json& doc, const DatasetSchema& schema);
  static ImputerPlan uniform(const ImputerSpec& spec, const DatasetSchema& schema);
  std::string label(const DatasetSchema& schema) const;
};

struct CompletedDataset {
  MultimodalDataset data;  // mask all true
  ImputerPlan provenance;
};

// Neighbor instrumentation for the leakage audit: target row id -> training
// row ids consulted while filling it.
struct ImputeTrace {
  std::map<std::string, std::set<std::string>> knn_neighbors;
};

class FittedImputer {
public:
  // Captures everything needed to impute unseen rows: column means/modes,
  // standardization statistics, the training matrix for knn, per-feature
  // ridge coefficients for the iterative method.
  static FittedImputer fit(const ImputerPlan& plan, const MultimodalDataset& train);
  static FittedImputer fit(const ImputerSpec& spec, const MultimodalDataset& train);

  // Fills the missing cells of the modalities covered by the plan; observed
  // cells are copied bit-exactly.
  MultimodalDataset fill(const MultimodalDataset& target, ImputeTrace* trace = nullptr) const;

  // fill() plus the completeness guarantee; errors when uncovered modalities
  // still contain missing cells.
  CompletedDataset impute(const MultimodalDataset& target, ImputeTrace* trace = nullptr) const;

  const ImputerPlan& plan() const { return plan_; }
  const std::vector<std::string>& training_row_ids() const { return train_ids_; }

private:
  ImputerPlan plan_;
  DatasetSchema schema_;
  std::vector<std::string> train_ids_;
  Standardizer stats_;            // all columns, observed training cells
  Eigen::VectorXd column_means_;  // original scale
  Eigen::VectorXd column_modes_;  // ordinal columns
  Eigen::MatrixXd train_std_;     // standardized training values (observed cells)
  Eigen::MatrixXd train_raw_;     // original-scale training values
  BoolMask train_mask_;
  // iterative: coefficient vector per continuous column, over [1 | other
  // continuous columns]; empty when the plan has no iterative entry.
  std::vector<Eigen::VectorXd> ridge_coefs_;
  std::vector<int> continuous_cols_;

  void fit_iterative_coefs(const std::set<int>& covered_cols, int max_rounds, double lambda);
  void fill_knn(const MultimodalDataset& target, const std::set<int>& knn_cols,
                const std::map<int, const ImputerSpec*>& col_spec, Eigen::MatrixXd& out,
                ImputeTrace* trace) const;
  void fill_iterative(const MultimodalDataset& target, const std::set<int>& iter_cols,
                      const ImputerSpec& spec, Eigen::MatrixXd& out) const;
};

struct ImputerSelectionReport {
  struct Row {
    int modality_id = 0;
    std::string modality;
    ImputerSpec spec;
    double kl_sum = 0.0;   // headline: sum over the modality's features
    double kl_mean = 0.0;  // mean over the modality's features
    bool chosen = false;
  };
  std::vector<Row> rows;
  ImputerPlan chosen;
  int k_bins = 0;
  double eps = 0.0;
};

// Scores every applicable candidate per modality by the aggregate KL between
// observed-cell and imputed-cell histograms; lowest KL wins, ties broken by
// catalog order. Modalities without missing cells are skipped.
ImputerSelectionReport select_imputer(const std::vector<ImputerSpec>& candidates,
                                      const MultimodalDataset& data, int k_bins, double eps);

// Table S3-style default catalog.
std::vector<ImputerSpec> default_imputer_catalog();

void write_selection_csv(const ImputerSelectionReport& report, const DatasetSchema& schema,
                         const std::string& path);

}  // namespace m2m

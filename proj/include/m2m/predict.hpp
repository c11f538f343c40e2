#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "m2m/preprocess.hpp"

namespace m2m {

enum class PredictorKind { linear, multitask_en, pls };

std::string to_string(PredictorKind kind);
PredictorKind predictor_kind_from_string(const std::string& text);

struct PredictorConfig {
  PredictorKind kind = PredictorKind::linear;
  // multitask_en; l1_ratio = 1 is the multi-task lasso
  double alpha = 1.0;
  double l1_ratio = 0.5;
  int max_iter = 1000;
  double tol = 1e-6;
  // pls
  int n_components = 2;
  // linear: ridge fallback (lambda 1e-8) when the design is numerically singular
  bool ridge_fallback = true;

  std::string label() const;
};

// Multi-output regressor with a uniform fit/predict contract. Standardization
// statistics come from the training rows and are applied inside predict.
class PredictorModel {
public:
  static PredictorModel fit(const PredictorConfig& config, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& y);

  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;

  // Coefficients on the original feature scale, P x T, plus intercepts.
  Eigen::MatrixXd effective_coefficients() const;
  Eigen::VectorXd intercepts() const;

  const PredictorConfig& config() const { return config_; }
  bool converged() const { return converged_; }
  const std::vector<double>& objective_history() const { return objective_history_; }
  // PLS X-scores (N_train x A), for the orthogonality property.
  const Eigen::MatrixXd& pls_scores() const { return pls_scores_; }

  nlohmann::json to_json() const;
  static PredictorModel from_json(const nlohmann::json& doc);

private:
  PredictorConfig config_;
  Standardizer x_stats_;
  Eigen::RowVectorXd y_mean_;
  Eigen::MatrixXd coef_;  // standardized-X space, centered-Y space; P x T
  bool converged_ = true;
  std::vector<double> objective_history_;
  Eigen::MatrixXd pls_scores_;
};

}  // namespace m2m

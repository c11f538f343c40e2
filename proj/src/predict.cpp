#include "m2m/predict.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "m2m/errors.hpp"

namespace m2m {

using nlohmann::json;

std::string to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::linear: return "linear";
    case PredictorKind::multitask_en: return "multitask_en";
    default: return "pls";
  }
}

PredictorKind predictor_kind_from_string(const std::string& text) {
  if (text == "linear") return PredictorKind::linear;
  if (text == "multitask_en") return PredictorKind::multitask_en;
  if (text == "pls") return PredictorKind::pls;
  contract_fail("UnknownPredictor", "predictor kind '" + text + "'");
}

std::string PredictorConfig::label() const {
  switch (kind) {
    case PredictorKind::linear:
      return "linear";
    case PredictorKind::multitask_en: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "multitask_en(a=%g,r=%g)", alpha, l1_ratio);
      return buf;
    }
    default:
      return "pls(" + std::to_string(n_components) + ")";
  }
}

namespace {

// OLS on standardized X / centered Y via column-pivoted QR; ridge fallback
// through the Gram matrix when the design is numerically singular.
Eigen::MatrixXd solve_linear(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& yc,
                             bool ridge_fallback) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() == xs.cols() && xs.rows() >= xs.cols()) {
    return qr.solve(yc);
  }
  if (!ridge_fallback) {
    contract_fail("RankDeficient", "feature matrix is rank deficient and the fallback is disabled");
  }
  const double lambda = 1e-8;
  Eigen::MatrixXd gram = xs.transpose() * xs;
  gram.diagonal().array() += lambda;
  return gram.ldlt().solve(xs.transpose() * yc);
}

double en_objective(const Eigen::MatrixXd& residual, const Eigen::MatrixXd& coef, double alpha,
                    double l1_ratio, double n) {
  double row_norms = 0.0;
  for (Eigen::Index j = 0; j < coef.rows(); ++j) row_norms += coef.row(j).norm();
  return residual.squaredNorm() / (2.0 * n) + alpha * l1_ratio * row_norms +
         0.5 * alpha * (1.0 - l1_ratio) * coef.squaredNorm();
}

// Block coordinate descent over coefficient rows with the group soft
// threshold; feature sweep order is schema order for determinism.
Eigen::MatrixXd solve_multitask_en(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& yc,
                                   double alpha, double l1_ratio, int max_iter, double tol,
                                   bool* converged, std::vector<double>* objective_history) {
  const double n = static_cast<double>(xs.rows());
  const Eigen::Index p = xs.cols();
  const Eigen::Index t = yc.cols();

  Eigen::VectorXd col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j) col_sq(j) = xs.col(j).squaredNorm() / n;

  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(p, t);
  Eigen::MatrixXd residual = yc;
  *converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    double max_update = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;  // constant column; its row stays zero
      const Eigen::RowVectorXd old = coef.row(j);
      Eigen::RowVectorXd corr = xs.col(j).transpose() * residual / n + col_sq(j) * old;
      const double norm = corr.norm();
      Eigen::RowVectorXd updated;
      if (norm <= alpha * l1_ratio) {
        updated = Eigen::RowVectorXd::Zero(t);
      } else {
        updated = corr * ((1.0 - alpha * l1_ratio / norm) / (col_sq(j) + alpha * (1.0 - l1_ratio)));
      }
      if (updated != old) {
        residual.noalias() += xs.col(j) * (old - updated);
        coef.row(j) = updated;
      }
      max_update = std::max(max_update, (updated - old).cwiseAbs().maxCoeff());
    }
    if (objective_history) {
      objective_history->push_back(en_objective(residual, coef, alpha, l1_ratio, n));
    }
    if (max_update < tol) {
      *converged = true;
      break;
    }
  }
  return coef;
}

// Classical two-block NIPALS with X- and Y-deflation.
Eigen::MatrixXd solve_pls(const Eigen::MatrixXd& xs_in, const Eigen::MatrixXd& yc_in,
                          int n_components, Eigen::MatrixXd* scores_out) {
  Eigen::MatrixXd x = xs_in;
  Eigen::MatrixXd y = yc_in;
  const Eigen::Index p = x.cols();
  const Eigen::Index t = y.cols();

  Eigen::MatrixXd weights(p, n_components);   // W
  Eigen::MatrixXd x_loadings(p, n_components);  // P
  Eigen::MatrixXd y_loadings(t, n_components);  // Q
  Eigen::MatrixXd scores(x.rows(), n_components);

  const double x_scale = xs_in.norm();
  for (int a = 0; a < n_components; ++a) {
    // Start u at the Y column with the largest remaining variance.
    Eigen::Index start = 0;
    y.colwise().squaredNorm().maxCoeff(&start);
    Eigen::VectorXd u = y.col(start);
    if (u.norm() < 1e-12) {
      contract_fail("ZeroVarianceDeflation", "response deflated to zero at component " +
                                                 std::to_string(a + 1));
    }
    Eigen::VectorXd w(p), t_score(x.rows()), q(t);
    Eigen::VectorXd t_prev = Eigen::VectorXd::Zero(x.rows());
    for (int inner = 0; inner < 500; ++inner) {
      w = x.transpose() * u;
      const double wn = w.norm();
      if (wn < 1e-12 * std::max(1.0, x_scale)) {
        contract_fail("ZeroVarianceDeflation",
                      "component " + std::to_string(a + 1) + " collapsed");
      }
      w /= wn;
      t_score = x * w;
      const double tt = t_score.squaredNorm();
      if (tt < 1e-24) {
        contract_fail("ZeroVarianceDeflation",
                      "component " + std::to_string(a + 1) + " collapsed");
      }
      q = y.transpose() * t_score / tt;
      if (t == 1) break;  // single-response inner loop converges immediately
      u = y * q / q.squaredNorm();
      if ((t_score - t_prev).norm() < 1e-12 * std::max(1.0, t_score.norm())) break;
      t_prev = t_score;
    }
    const double tt = t_score.squaredNorm();
    const Eigen::VectorXd p_load = x.transpose() * t_score / tt;
    x.noalias() -= t_score * p_load.transpose();
    y.noalias() -= t_score * q.transpose();
    weights.col(a) = w;
    x_loadings.col(a) = p_load;
    y_loadings.col(a) = q;
    scores.col(a) = t_score;
  }
  if (scores_out) *scores_out = scores;
  // B = W (P^T W)^{-1} Q^T
  const Eigen::MatrixXd pw = x_loadings.transpose() * weights;
  return weights * pw.partialPivLu().solve(y_loadings.transpose());
}

}  // namespace

PredictorModel PredictorModel::fit(const PredictorConfig& config, const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& y) {
  require(x.rows() == y.rows(), "ShapeMismatch", "X and Y row counts differ");
  require(x.rows() >= 2, "TooFewSamples", "need at least two training rows");
  PredictorModel model;
  model.config_ = config;
  model.x_stats_ = Standardizer::fit(x);
  model.y_mean_ = y.colwise().mean();

  const Eigen::MatrixXd xs = model.x_stats_.transform(x);
  const Eigen::MatrixXd yc = y.rowwise() - model.y_mean_;

  switch (config.kind) {
    case PredictorKind::linear:
      model.coef_ = solve_linear(xs, yc, config.ridge_fallback);
      break;
    case PredictorKind::multitask_en: {
      require(config.alpha >= 0.0, "InvalidHyperparameter", "alpha must be non-negative");
      require(config.l1_ratio >= 0.0 && config.l1_ratio <= 1.0, "InvalidHyperparameter",
              "l1_ratio must lie in [0, 1]");
      model.coef_ = solve_multitask_en(xs, yc, config.alpha, config.l1_ratio, config.max_iter,
                                       config.tol, &model.converged_, &model.objective_history_);
      break;
    }
    case PredictorKind::pls: {
      const int max_components =
          static_cast<int>(std::min<Eigen::Index>(x.rows() - 1, x.cols()));
      require(config.n_components >= 1 && config.n_components <= max_components,
              "InvalidHyperparameter",
              "n_components must lie in [1, min(N-1, P)] = [1, " + std::to_string(max_components) + "]");
      model.coef_ = solve_pls(xs, yc, config.n_components, &model.pls_scores_);
      break;
    }
  }
  return model;
}

Eigen::MatrixXd PredictorModel::predict(const Eigen::MatrixXd& x) const {
  require(x.cols() == x_stats_.width(), "ShapeMismatch",
          "prediction input width differs from training");
  return (x_stats_.transform(x) * coef_).rowwise() + y_mean_;
}

Eigen::MatrixXd PredictorModel::effective_coefficients() const {
  Eigen::MatrixXd out = coef_;
  const auto& cols = x_stats_.columns();
  for (Eigen::Index j = 0; j < out.rows(); ++j) {
    const auto& c = cols[static_cast<std::size_t>(j)];
    if (!c.constant) out.row(j) /= c.sd;
  }
  return out;
}

Eigen::VectorXd PredictorModel::intercepts() const {
  const Eigen::MatrixXd eff = effective_coefficients();
  Eigen::VectorXd intercept = y_mean_.transpose();
  const auto& cols = x_stats_.columns();
  for (Eigen::Index j = 0; j < eff.rows(); ++j) {
    const auto& c = cols[static_cast<std::size_t>(j)];
    const double center = c.constant ? 0.0 : c.mean;
    intercept -= eff.row(j).transpose() * center;
  }
  return intercept;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& doc) {
  const Eigen::Index rows = static_cast<Eigen::Index>(doc.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(doc[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = doc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

}  // namespace

json PredictorModel::to_json() const {
  json doc;
  doc["format_version"] = 1;
  doc["kind"] = to_string(config_.kind);
  doc["hyperparameters"] = {{"alpha", config_.alpha},
                            {"l1_ratio", config_.l1_ratio},
                            {"max_iter", config_.max_iter},
                            {"tol", config_.tol},
                            {"n_components", config_.n_components},
                            {"ridge_fallback", config_.ridge_fallback}};
  json stats = json::array();
  for (const auto& c : x_stats_.columns()) {
    stats.push_back({{"mean", c.mean}, {"sd", c.sd}, {"constant", c.constant}});
  }
  doc["x_stats"] = std::move(stats);
  doc["y_mean"] = std::vector<double>(y_mean_.data(), y_mean_.data() + y_mean_.size());
  doc["coef"] = matrix_to_json(coef_);
  doc["converged"] = converged_;
  return doc;
}

PredictorModel PredictorModel::from_json(const json& doc) {
  require(doc.at("format_version").get<int>() == 1, "UnsupportedVersion",
          "predictor document version mismatch");
  PredictorModel model;
  model.config_.kind = predictor_kind_from_string(doc.at("kind").get<std::string>());
  const auto& hp = doc.at("hyperparameters");
  model.config_.alpha = hp.at("alpha").get<double>();
  model.config_.l1_ratio = hp.at("l1_ratio").get<double>();
  model.config_.max_iter = hp.at("max_iter").get<int>();
  model.config_.tol = hp.at("tol").get<double>();
  model.config_.n_components = hp.at("n_components").get<int>();
  model.config_.ridge_fallback = hp.at("ridge_fallback").get<bool>();
  std::vector<ColumnStats> cols;
  for (const auto& c : doc.at("x_stats")) {
    cols.push_back({c.at("mean").get<double>(), c.at("sd").get<double>(),
                    c.at("constant").get<bool>()});
  }
  model.x_stats_ = Standardizer::from_columns(std::move(cols));
  const auto ym = doc.at("y_mean").get<std::vector<double>>();
  model.y_mean_ = Eigen::Map<const Eigen::RowVectorXd>(ym.data(), static_cast<Eigen::Index>(ym.size()));
  model.coef_ = matrix_from_json(doc.at("coef"));
  model.converged_ = doc.at("converged").get<bool>();
  return model;
}

}  // namespace m2m

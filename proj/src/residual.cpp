#include "m2m/residual.hpp"

#include "m2m/errors.hpp"

namespace m2m {

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd design(z.rows(), z.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(z.cols()) = z;
  return design;
}

}  // namespace

Eigen::MatrixXd fit_ols(const Eigen::MatrixXd& confounders, const Eigen::MatrixXd& responses) {
  require(confounders.rows() == responses.rows(), "ShapeMismatch",
          "confounders and responses disagree on row count");
  const Eigen::MatrixXd design = with_intercept(confounders);
  require(design.rows() >= design.cols(), "RankDeficient",
          "need at least C+1 rows to fit the confounder design");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    contract_fail("RankDeficient", "confounder design [1|Z] is rank deficient");
  }
  return qr.solve(responses);
}

Eigen::MatrixXd residualize(const Eigen::MatrixXd& response, const Eigen::MatrixXd& confounders,
                            const Eigen::MatrixXd& coefs) {
  require(coefs.rows() == confounders.cols() + 1, "ShapeMismatch",
          "coefficient rows must equal C+1");
  require(coefs.cols() == response.cols(), "ShapeMismatch",
          "coefficient columns must match the response");
  require(response.rows() == confounders.rows(), "ShapeMismatch",
          "response and confounders disagree on row count");
  return response - with_intercept(confounders) * coefs;
}

Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& predicted_residuals,
                            const Eigen::MatrixXd& confounders, const Eigen::MatrixXd& beta) {
  require(beta.rows() == confounders.cols() + 1, "ShapeMismatch", "beta rows must equal C+1");
  require(beta.cols() == predicted_residuals.cols(), "ShapeMismatch",
          "beta columns must match the prediction");
  require(predicted_residuals.rows() == confounders.rows(), "ShapeMismatch",
          "prediction and confounders disagree on row count");
  return predicted_residuals + with_intercept(confounders) * beta;
}

ResidualizationCoefs fit_residualization(const Eigen::MatrixXd& features,
                                         const Eigen::MatrixXd& targets,
                                         const Eigen::MatrixXd& confounders) {
  ResidualizationCoefs coefs;
  coefs.gamma_hat = fit_ols(confounders, features);
  coefs.beta_hat = fit_ols(confounders, targets);
  return coefs;
}

double design_residual_correlation(const Eigen::MatrixXd& residuals,
                                   const Eigen::MatrixXd& confounders) {
  const Eigen::MatrixXd design = with_intercept(confounders);
  return (design.transpose() * residuals).cwiseAbs().maxCoeff();
}

}  // namespace m2m

#pragma once

#include <Eigen/Dense>

namespace m2m {

// OLS coefficients with the intercept in row 0; gamma maps confounders to
// features, beta maps confounders to targets. Always fit on training rows.
struct ResidualizationCoefs {
  Eigen::MatrixXd gamma_hat;  // (C+1) x P
  Eigen::MatrixXd beta_hat;   // (C+1) x T
};

// Least squares of each response column on [1 | Z]; returns (C+1) x K.
// Column-pivoted QR with a rank check at relative tolerance 1e-10.
Eigen::MatrixXd fit_ols(const Eigen::MatrixXd& confounders, const Eigen::MatrixXd& responses);

// response - [1 | Z] * coefs
Eigen::MatrixXd residualize(const Eigen::MatrixXd& response, const Eigen::MatrixXd& confounders,
                            const Eigen::MatrixXd& coefs);

// predicted_residuals + [1 | Z] * beta
Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& predicted_residuals,
                            const Eigen::MatrixXd& confounders, const Eigen::MatrixXd& beta);

ResidualizationCoefs fit_residualization(const Eigen::MatrixXd& features,
                                         const Eigen::MatrixXd& targets,
                                         const Eigen::MatrixXd& confounders);

// max |[1|Z]^T residual| over all columns; the orthogonality certificate.
double design_residual_correlation(const Eigen::MatrixXd& residuals,
                                   const Eigen::MatrixXd& confounders);

}  // namespace m2m

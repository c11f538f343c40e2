#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace m2m {

// Histograms of the observed (P) and imputed (Q) values of one feature over a
// shared equal-width grid; last bin right-closed.
struct SharedBinHistogramPair {
  std::vector<double> bin_edges;  // K + 1, strictly increasing
  Eigen::VectorXd p;              // observed-cell probabilities, sums to 1
  Eigen::VectorXd q;              // imputed-cell probabilities, sums to 1
};

SharedBinHistogramPair shared_bins(const std::vector<double>& observed_values,
                                   const std::vector<double>& imputed_values, int k_bins);

// sum_k (P_k + eps) ln((P_k + eps)/(Q_k + eps)); natural log.
double kl_divergence(const SharedBinHistogramPair& pair, double eps);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// D = sup |ECDF_a - ECDF_b|; p-value via the asymptotic Kolmogorov series
// 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2), truncated below 1e-12.
KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b);

double pearson_r(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// Aggregate of per-feature KL values over modalities; the overall numbers
// carry the 1/M prefactor. "sum" aggregates features by summation (the
// formula as written), "mean" by averaging; both are reported.
struct DivergenceScore {
  struct FeatureKl {
    int modality_id = 0;
    std::string feature;
    double kl = 0.0;
  };
  std::vector<FeatureKl> per_feature;
  std::map<int, double> modality_sum;
  std::map<int, double> modality_mean;
  double overall_sum = 0.0;
  double overall_mean = 0.0;
  double eps = 0.0;

  static DivergenceScore aggregate(const std::vector<FeatureKl>& features, int n_modalities,
                                   double eps);
};

}  // namespace m2m

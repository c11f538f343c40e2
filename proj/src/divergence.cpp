#include "m2m/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "m2m/errors.hpp"

namespace m2m {

SharedBinHistogramPair shared_bins(const std::vector<double>& observed_values,
                                   const std::vector<double>& imputed_values, int k_bins) {
  require(!observed_values.empty() && !imputed_values.empty(), "EmptySample",
          "shared_bins needs non-empty observed and imputed samples");
  require(k_bins >= 2, "InvalidBinCount", "K must be at least 2");

  double lo = observed_values[0];
  double hi = observed_values[0];
  for (double v : observed_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : imputed_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {  // degenerate union range; widen so the grid stays valid
    lo -= 0.5;
    hi += 0.5;
  }

  SharedBinHistogramPair pair;
  pair.bin_edges.resize(static_cast<std::size_t>(k_bins) + 1);
  const double width = (hi - lo) / k_bins;
  for (int k = 0; k <= k_bins; ++k) pair.bin_edges[static_cast<std::size_t>(k)] = lo + width * k;
  pair.bin_edges.front() = lo;
  pair.bin_edges.back() = hi;

  auto histogram = [&](const std::vector<double>& values) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(k_bins);
    for (double v : values) {
      int idx = static_cast<int>(std::floor((v - lo) / width));
      idx = std::clamp(idx, 0, k_bins - 1);  // right-closes the last bin
      h(idx) += 1.0;
    }
    return Eigen::VectorXd(h / static_cast<double>(values.size()));
  };
  pair.p = histogram(observed_values);
  pair.q = histogram(imputed_values);
  return pair;
}

double kl_divergence(const SharedBinHistogramPair& pair, double eps) {
  require(eps > 0.0, "InvalidEps", "eps must be positive");
  double kl = 0.0;
  for (Eigen::Index k = 0; k < pair.p.size(); ++k) {
    const double p = pair.p(k) + eps;
    const double q = pair.q(k) + eps;
    kl += p * std::log(p / q);
  }
  return kl;
}

KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  require(!a.empty() && !b.empty(), "EmptySample", "both KS samples must be non-empty");
  std::vector<double> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < sa.size() && ib < sb.size()) {
    const double t = std::min(sa[ia], sb[ib]);
    while (ia < sa.size() && sa[ia] <= t) ++ia;
    while (ib < sb.size() && sb[ib] <= t) ++ib;
    d = std::max(d, std::abs(ia / na - ib / nb));
  }

  KsResult result;
  result.statistic = d;
  const double lambda = d * std::sqrt(na * nb / (na + nb));
  if (lambda < 1e-12) {
    result.p_value = 1.0;
    return result;
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  result.p_value = std::clamp(2.0 * sum, 0.0, 1.0);
  return result;
}

double pearson_r(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  require(y.size() == yhat.size(), "LengthMismatch", "pearson_r inputs differ in length");
  require(y.size() >= 2, "TooFewSamples", "pearson_r needs at least 2 samples");
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd hc = yhat.array() - yhat.mean();
  const double sy = yc.squaredNorm();
  const double sh = hc.squaredNorm();
  require(sy > 0.0 && sh > 0.0, "ConstantInput", "pearson_r is undefined for constant input");
  return std::clamp(yc.dot(hc) / std::sqrt(sy * sh), -1.0, 1.0);
}

double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  require(y.size() == yhat.size(), "LengthMismatch", "mae inputs differ in length");
  require(y.size() >= 1, "EmptySample", "mae needs at least one pair");
  return (y - yhat).cwiseAbs().mean();
}

DivergenceScore DivergenceScore::aggregate(const std::vector<FeatureKl>& features,
                                           int n_modalities, double eps) {
  DivergenceScore score;
  score.per_feature = features;
  score.eps = eps;
  std::map<int, int> counts;
  for (const auto& f : features) {
    score.modality_sum[f.modality_id] += f.kl;
    counts[f.modality_id] += 1;
  }
  for (const auto& [m, total] : score.modality_sum) {
    score.modality_mean[m] = total / counts[m];
    score.overall_sum += total;
    score.overall_mean += score.modality_mean[m];
  }
  if (n_modalities > 0) {
    score.overall_sum /= n_modalities;
    score.overall_mean /= n_modalities;
  }
  return score;
}

}  // namespace m2m

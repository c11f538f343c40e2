#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "m2m/datamodel.hpp"

namespace m2m {

// ---- train-statistics standardization --------------------------------------

struct ColumnStats {
  double mean = 0.0;
  double sd = 1.0;    // sample sd over observed training cells
  bool constant = false;
};

// Per-column (x - mean)/sd with statistics from observed training cells only.
// Constant columns pass through unchanged and are flagged.
class Standardizer {
public:
  static Standardizer fit(const Eigen::MatrixXd& values, const BoolMask* mask = nullptr);
  static Standardizer from_columns(std::vector<ColumnStats> cols);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& values) const;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& values) const;
  double transform_cell(Eigen::Index col, double v) const;
  double inverse_cell(Eigen::Index col, double v) const;

  const std::vector<ColumnStats>& columns() const { return cols_; }
  Eigen::Index width() const { return static_cast<Eigen::Index>(cols_.size()); }

private:
  std::vector<ColumnStats> cols_;
};

// ---- transcriptomics-style preprocessing ------------------------------------

// Collapses probe columns onto genes, cell = max over the gene's probes.
Eigen::MatrixXd merge_probes_max(const Eigen::MatrixXd& expression,
                                 const std::vector<std::string>& probe_names,
                                 const std::map<std::string, std::string>& probe_to_gene,
                                 std::vector<std::string>* gene_names_out);

std::map<std::string, std::string> load_probe_map(const std::string& csv_path);

struct Gmm2Fit {
  double mean1 = 0.0, sd1 = 1.0, weight1 = 0.5;
  double mean2 = 0.0, sd2 = 1.0, weight2 = 0.5;  // mean1 <= mean2
  int iterations = 0;
  bool converged = false;
  std::vector<double> loglik_history;  // one entry per EM iteration
};

// Two-component univariate Gaussian mixture by EM. Initialization is a
// deterministic 2-means split seeded at the extreme values, so identical
// inputs always give identical fits.
Gmm2Fit fit_gmm2(const std::vector<double>& values, int max_iter = 200, double tol = 1e-8);

// Midpoint between the component means; the low-expression cutoff.
double expression_threshold(const Gmm2Fit& fit);

struct RankedFeature {
  std::string name;
  double log2fc = 0.0;
};

struct RankedFeatures {
  std::vector<RankedFeature> entries;  // descending |log2fc|
  std::string group_a, group_b;
};

// Per gene: mean over group_a minus mean over group_b (inputs already on the
// log2 scale), ranked by descending absolute value.
RankedFeatures log2_fold_change(const Eigen::MatrixXd& genes,
                                const std::vector<std::string>& gene_names,
                                const std::vector<Group>& labels, Group group_a, Group group_b);

}  // namespace m2m

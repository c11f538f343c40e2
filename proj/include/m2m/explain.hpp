#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace m2m {

// Model-agnostic prediction surface: rows in, predictions (N x T) out.
using PredictFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

enum class ImportanceMethod { permutation, shapley, mask };

std::string to_string(ImportanceMethod method);

struct ImportanceReport {
  ImportanceMethod method = ImportanceMethod::permutation;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  Eigen::MatrixXd per_target;     // F x T
  Eigen::VectorXd mean_score;     // F; per-target differences averaged over targets
  Eigen::VectorXd mean_r_first;   // F; target-averaged r differenced (verbose twin)
  Eigen::VectorXd baseline_r;     // T
  int repeats = 0;
  std::uint64_t seed = 0;
};

// I_j: drop in per-target Pearson r when column j is shuffled across rows,
// averaged over K seeded shuffles. A feature the model ignores scores exactly
// zero. The permutation source is injectable for the forced-identity case.
using PermutationSource =
    std::function<std::vector<std::size_t>(std::size_t n, std::size_t feature, int repeat)>;

ImportanceReport permutation_importance(const PredictFn& model, const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y,
                                        const std::vector<std::string>& feature_names,
                                        const std::vector<std::string>& target_names,
                                        int k_repeats, std::uint64_t seed,
                                        const PermutationSource& source = nullptr);

struct ShapleyReport {
  std::vector<int> feature_indices;   // the q explained features
  Eigen::MatrixXd phi;                // q x T
  Eigen::RowVectorXd baseline_value;  // v(empty coalition) per target
  Eigen::RowVectorXd full_value;      // v(all explained features) per target
};

// Exact Shapley values by subset enumeration (q <= 15) with memoized
// coalition values. Out-of-coalition features sit at the background means.
ShapleyReport shapley_exact(const PredictFn& model, const Eigen::RowVectorXd& row,
                            const Eigen::RowVectorXd& background,
                            const std::vector<int>& feature_subset);

struct RegionTable {
  struct Row {
    std::string feature, region, network;
    double score = 0.0;
  };
  std::vector<Row> rows;      // mapped features, descending score
  std::vector<Row> overflow;  // report features absent from the atlas
};

// Joins mean importance scores onto a "feature,region,network" atlas CSV.
RegionTable region_importance_table(const ImportanceReport& report,
                                    const std::string& atlas_csv_path);

void write_importance_csv(const ImportanceReport& report, const std::string& path, bool verbose);
void write_region_csv(const RegionTable& table, const std::string& path);

}  // namespace m2m

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace m2m {

enum class ModalityKind { continuous, ordinal };
enum class Group { CN, MCI, AD };

std::string to_string(ModalityKind kind);
std::string to_string(Group group);
ModalityKind modality_kind_from_string(const std::string& text);
Group group_from_string(const std::string& text);

using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct ModalitySchema {
  int modality_id = 0;  // 1-based
  std::string name;
  ModalityKind kind = ModalityKind::continuous;
  std::vector<std::string> feature_names;

  int width() const { return static_cast<int>(feature_names.size()); }
};

struct DatasetSchema {
  std::vector<ModalitySchema> modalities;
  std::vector<std::string> target_names;
  std::vector<std::string> confounder_names;

  int n_features() const;
  int n_modalities() const { return static_cast<int>(modalities.size()); }
  // Flat column range [begin, end) of one modality, schema order.
  std::pair<int, int> column_range(int modality_index) const;
  std::vector<std::string> flat_feature_names() const;

  // Feature names unique, every modality non-empty, at most one ordinal
  // modality (it carries the constant-fill convention).
  void validate() const;
};

DatasetSchema load_schema(const std::string& path);
void save_schema(const DatasetSchema& schema, const std::string& path);

struct MultimodalDataset {
  DatasetSchema schema;
  Eigen::MatrixXd values;  // N x sum(p_m); cells meaningful only where mask
  BoolMask mask;           // true = observed
  std::vector<std::string> row_ids;
  std::optional<std::vector<Group>> group_labels;

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_cols() const { return values.cols(); }
  int modality_of_column(Eigen::Index col) const;
  ModalityKind kind_of_column(Eigen::Index col) const;
  bool row_complete(Eigen::Index row) const;
  Eigen::Index observed_count() const { return mask.count(); }

  // Row subset in the given order; group labels follow when present.
  MultimodalDataset subset_rows(const std::vector<Eigen::Index>& rows) const;
  // Column subset restricted to whole modalities.
  MultimodalDataset subset_modalities(const std::vector<int>& modality_indices) const;

  void validate() const;
};

struct TargetMatrix {
  Eigen::MatrixXd values;  // N x T, no missing entries
  std::vector<std::string> target_names;

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_targets() const { return values.cols(); }
};

struct ConfounderMatrix {
  Eigen::MatrixXd values;  // N x C, no missing entries
  std::vector<std::string> names;

  Eigen::Index n_rows() const { return values.rows(); }
};

struct ObservedIndex {
  Eigen::Index row;
  Eigen::Index col;   // flat column
  int modality_id;    // 1-based

  bool operator==(const ObservedIndex&) const = default;
};

// The observed index set O; the missing set M is its complement over the
// full row x column cube.
std::vector<ObservedIndex> observed_index_set(const MultimodalDataset& d);

struct CompletenessSplit {
  std::vector<std::string> complete_ids;
  std::vector<std::string> incomplete_ids;
};

CompletenessSplit split_complete_incomplete(const MultimodalDataset& d);

// ---- disk I/O ----------------------------------------------------------

MultimodalDataset load_dataset(const std::string& features_path, const std::string& schema_path);
void save_dataset(const MultimodalDataset& d, const std::string& features_path);

struct LoadedTables {
  MultimodalDataset features;
  TargetMatrix targets;
  ConfounderMatrix confounders;
};

// Joins the three id-keyed CSVs. Ids present in one file but not another are
// an error; rows whose target cells are empty are dropped from all three.
// Missing confounder cells are an error.
LoadedTables load_joined(const std::string& features_path, const std::string& targets_path,
                         const std::string& confounders_path, const std::string& schema_path);

void save_targets(const TargetMatrix& t, const std::vector<std::string>& row_ids,
                  const std::string& path);
void save_confounders(const ConfounderMatrix& c, const std::vector<std::string>& row_ids,
                      const std::string& path);

// ---- synthetic data ----------------------------------------------------

enum class MissingnessMode {
  block,      // per (row, modality): whole block masked with prob rate
  cellwise,   // per cell
  block_twin  // rows come in value-identical pairs; only the second copy masked
};

struct SyntheticConfig {
  double noise_sd = 0.1;
  double missingness_rate = 0.0;
  MissingnessMode mode = MissingnessMode::block;
  int n_targets = 4;
  int n_confounders = 3;
  // Optional fixed weights (sum p_m x n_targets); drawn from the seed when absent.
  std::optional<Eigen::MatrixXd> weights;
};

struct SyntheticGroundTruth {
  Eigen::MatrixXd weights;    // sum(p_m) x T
  Eigen::MatrixXd beta_true;  // C x T
  double noise_sd = 0.0;
  double missingness_rate = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  MultimodalDataset dataset;        // mask applied
  Eigen::MatrixXd complete_values;  // pre-masking truth, same shape as dataset.values
  TargetMatrix targets;
  ConfounderMatrix confounders;
  SyntheticGroundTruth truth;
};

// Pure function of its arguments. Continuous features ~ N(modality_id, 1);
// ordinal features are uniform codes {0,1,2}. Targets Y = XW + Z beta + noise.
// Rows never lose every modality: block draws are resampled until at least
// one block stays observed, so distance-based imputers always have co-observed
// features to work with.
SyntheticData generate_synthetic(Eigen::Index n_rows, const DatasetSchema& schema,
                                 const SyntheticConfig& config, std::uint64_t seed);

// 3 continuous modalities + 1 ordinal, small widths; the desk-scale stand-in
// for the imaging/CSF/transcriptomics/genotype layout.
DatasetSchema default_synthetic_schema();

}  // namespace m2m

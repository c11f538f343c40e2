#include "m2m/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "m2m/csv.hpp"
#include "m2m/errors.hpp"
#include "m2m/rng.hpp"

namespace m2m {

using nlohmann::json;

std::string to_string(ModalityKind kind) {
  return kind == ModalityKind::continuous ? "continuous" : "ordinal";
}

std::string to_string(Group group) {
  switch (group) {
    case Group::CN: return "CN";
    case Group::MCI: return "MCI";
    default: return "AD";
  }
}

ModalityKind modality_kind_from_string(const std::string& text) {
  if (text == "continuous") return ModalityKind::continuous;
  if (text == "ordinal") return ModalityKind::ordinal;
  contract_fail("UnknownKind", "modality kind must be continuous or ordinal, got '" + text + "'");
}

Group group_from_string(const std::string& text) {
  if (text == "CN") return Group::CN;
  if (text == "MCI") return Group::MCI;
  if (text == "AD") return Group::AD;
  contract_fail("UnknownGroup", "group label must be CN, MCI or AD, got '" + text + "'");
}

int DatasetSchema::n_features() const {
  int total = 0;
  for (const auto& m : modalities) total += m.width();
  return total;
}

std::pair<int, int> DatasetSchema::column_range(int modality_index) const {
  int begin = 0;
  for (int i = 0; i < modality_index; ++i) begin += modalities[static_cast<std::size_t>(i)].width();
  return {begin, begin + modalities[static_cast<std::size_t>(modality_index)].width()};
}

std::vector<std::string> DatasetSchema::flat_feature_names() const {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n_features()));
  for (const auto& m : modalities) {
    names.insert(names.end(), m.feature_names.begin(), m.feature_names.end());
  }
  return names;
}

void DatasetSchema::validate() const {
  require(!modalities.empty(), "EmptySchema", "schema declares no modalities");
  std::set<std::string> seen;
  int ordinal_count = 0;
  for (const auto& m : modalities) {
    require(m.width() >= 1, "EmptyModality", "modality '" + m.name + "' has no features");
    if (m.kind == ModalityKind::ordinal) ++ordinal_count;
    for (const auto& f : m.feature_names) {
      require(seen.insert(f).second, "DuplicateFeature",
              "feature '" + f + "' declared more than once");
    }
  }
  require(ordinal_count <= 1, "MultipleOrdinalModalities",
          "at most one ordinal modality may carry the constant-fill convention");
}

DatasetSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) contract_fail("FileNotFound", "cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    contract_fail("MalformedSchema", std::string(e.what()));
  }
  DatasetSchema schema;
  int next_id = 1;
  for (const auto& m : doc.at("modalities")) {
    ModalitySchema ms;
    ms.modality_id = next_id++;
    ms.name = m.at("name").get<std::string>();
    ms.kind = modality_kind_from_string(m.at("kind").get<std::string>());
    ms.feature_names = m.at("features").get<std::vector<std::string>>();
    schema.modalities.push_back(std::move(ms));
  }
  if (doc.contains("targets")) schema.target_names = doc["targets"].get<std::vector<std::string>>();
  if (doc.contains("confounders")) {
    schema.confounder_names = doc["confounders"].get<std::vector<std::string>>();
  }
  schema.validate();
  return schema;
}

void save_schema(const DatasetSchema& schema, const std::string& path) {
  json doc;
  doc["modalities"] = json::array();
  for (const auto& m : schema.modalities) {
    doc["modalities"].push_back(
        {{"name", m.name}, {"kind", to_string(m.kind)}, {"features", m.feature_names}});
  }
  doc["targets"] = schema.target_names;
  doc["confounders"] = schema.confounder_names;
  std::ofstream out(path, std::ios::binary);
  if (!out) contract_fail("FileNotWritable", "cannot write " + path);
  out << doc.dump(2) << "\n";
}

int MultimodalDataset::modality_of_column(Eigen::Index col) const {
  int begin = 0;
  for (std::size_t i = 0; i < schema.modalities.size(); ++i) {
    const int end = begin + schema.modalities[i].width();
    if (col >= begin && col < end) return static_cast<int>(i);
    begin = end;
  }
  contract_fail("ColumnOutOfRange", "column " + std::to_string(col));
}

ModalityKind MultimodalDataset::kind_of_column(Eigen::Index col) const {
  return schema.modalities[static_cast<std::size_t>(modality_of_column(col))].kind;
}

bool MultimodalDataset::row_complete(Eigen::Index row) const {
  for (Eigen::Index j = 0; j < n_cols(); ++j) {
    if (!mask(row, j)) return false;
  }
  return true;
}

MultimodalDataset MultimodalDataset::subset_rows(const std::vector<Eigen::Index>& rows) const {
  MultimodalDataset out;
  out.schema = schema;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), n_cols());
  out.mask.resize(static_cast<Eigen::Index>(rows.size()), n_cols());
  out.row_ids.reserve(rows.size());
  if (group_labels) out.group_labels.emplace();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index r = rows[i];
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(r);
    out.mask.row(static_cast<Eigen::Index>(i)) = mask.row(r);
    out.row_ids.push_back(row_ids[static_cast<std::size_t>(r)]);
    if (group_labels) out.group_labels->push_back((*group_labels)[static_cast<std::size_t>(r)]);
  }
  return out;
}

MultimodalDataset MultimodalDataset::subset_modalities(const std::vector<int>& modality_indices) const {
  MultimodalDataset out;
  out.row_ids = row_ids;
  out.group_labels = group_labels;
  int width = 0;
  for (int mi : modality_indices) {
    out.schema.modalities.push_back(schema.modalities[static_cast<std::size_t>(mi)]);
    width += schema.modalities[static_cast<std::size_t>(mi)].width();
  }
  out.schema.target_names = schema.target_names;
  out.schema.confounder_names = schema.confounder_names;
  out.values.resize(n_rows(), width);
  out.mask.resize(n_rows(), width);
  int at = 0;
  for (int mi : modality_indices) {
    const auto [begin, end] = schema.column_range(mi);
    const int w = end - begin;
    out.values.middleCols(at, w) = values.middleCols(begin, w);
    out.mask.middleCols(at, w) = mask.middleCols(begin, w);
    at += w;
  }
  // Re-number so downstream provenance stays 1-based and dense.
  for (std::size_t i = 0; i < out.schema.modalities.size(); ++i) {
    out.schema.modalities[i].modality_id = static_cast<int>(i) + 1;
  }
  return out;
}

void MultimodalDataset::validate() const {
  schema.validate();
  require(values.rows() >= 1, "EmptyDataset", "dataset has no rows");
  require(values.rows() == mask.rows() && values.cols() == mask.cols(), "ShapeMismatch",
          "values and mask shapes differ");
  require(values.cols() == schema.n_features(), "ShapeMismatch",
          "value columns do not match schema width");
  require(static_cast<Eigen::Index>(row_ids.size()) == values.rows(), "ShapeMismatch",
          "row id count does not match row count");
  for (Eigen::Index j = 0; j < n_cols(); ++j) {
    if (kind_of_column(j) != ModalityKind::ordinal) continue;
    for (Eigen::Index i = 0; i < n_rows(); ++i) {
      if (!mask(i, j)) continue;
      const double v = values(i, j);
      require(v >= 0.0 && v == std::floor(v), "OrdinalNonInteger",
              "ordinal cell (" + row_ids[static_cast<std::size_t>(i)] + ", col " +
                  std::to_string(j) + ") holds " + csv::format_double(v));
    }
  }
}

std::vector<ObservedIndex> observed_index_set(const MultimodalDataset& d) {
  std::vector<ObservedIndex> out;
  out.reserve(static_cast<std::size_t>(d.mask.count()));
  for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < d.n_cols(); ++j) {
      if (d.mask(i, j)) {
        out.push_back({i, j, d.schema.modalities[static_cast<std::size_t>(d.modality_of_column(j))].modality_id});
      }
    }
  }
  return out;
}

CompletenessSplit split_complete_incomplete(const MultimodalDataset& d) {
  CompletenessSplit split;
  for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
    auto& bucket = d.row_complete(i) ? split.complete_ids : split.incomplete_ids;
    bucket.push_back(d.row_ids[static_cast<std::size_t>(i)]);
  }
  return split;
}

// ---- CSV loading ---------------------------------------------------------

namespace {

constexpr const char* kGroupColumn = "group";

double parse_cell(const std::string& text, const std::string& row_id, const std::string& column) {
  bool ok = false;
  const double v = csv::parse_double(text, &ok);
  if (!ok) {
    contract_fail("NonNumericCell",
                  "row '" + row_id + "', column '" + column + "': '" + text + "'");
  }
  return v;
}

}  // namespace

MultimodalDataset load_dataset(const std::string& features_path, const std::string& schema_path) {
  const DatasetSchema schema = load_schema(schema_path);
  const csv::Table table = csv::read_file(features_path);
  require(!table.header.empty() && table.header[0] == "id", "MissingIdColumn",
          "features CSV must start with an 'id' column");

  const auto flat_names = schema.flat_feature_names();
  std::map<std::string, int> schema_index;
  for (std::size_t i = 0; i < flat_names.size(); ++i) {
    schema_index[flat_names[i]] = static_cast<int>(i);
  }

  // CSV column -> flat schema column; -1 marks the optional group column.
  std::vector<int> csv_to_flat(table.header.size(), -2);
  csv_to_flat[0] = -2;
  int group_col = -1;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (name == kGroupColumn) {
      group_col = static_cast<int>(c);
      csv_to_flat[c] = -1;
      continue;
    }
    auto it = schema_index.find(name);
    if (it == schema_index.end()) {
      contract_fail("UnknownColumn", "CSV column '" + name + "' is absent from the schema");
    }
    csv_to_flat[c] = it->second;
  }
  std::vector<bool> present(flat_names.size(), false);
  for (int v : csv_to_flat) {
    if (v >= 0) present[static_cast<std::size_t>(v)] = true;
  }
  for (std::size_t i = 0; i < present.size(); ++i) {
    require(present[i], "MissingColumn", "schema feature '" + flat_names[i] + "' missing from CSV");
  }

  MultimodalDataset d;
  d.schema = schema;
  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  require(n >= 1, "EmptyDataset", "features CSV has no data rows");
  d.values = Eigen::MatrixXd::Zero(n, schema.n_features());
  d.mask = BoolMask::Constant(n, schema.n_features(), false);
  if (group_col >= 0) d.group_labels.emplace();

  std::set<std::string> id_seen;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::string& id = row[0];
    require(id_seen.insert(id).second, "DuplicateRowId", "row id '" + id + "' repeats");
    d.row_ids.push_back(id);
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (static_cast<int>(c) == group_col) {
        d.group_labels->push_back(group_from_string(row[c]));
        continue;
      }
      const int j = csv_to_flat[c];
      if (row[c].empty()) continue;  // missing cell
      const double v = parse_cell(row[c], id, table.header[c]);
      d.values(i, j) = v;
      d.mask(i, j) = true;
    }
  }
  d.validate();
  return d;
}

void save_dataset(const MultimodalDataset& d, const std::string& features_path) {
  std::ofstream out(features_path, std::ios::binary);
  if (!out) contract_fail("FileNotWritable", "cannot write " + features_path);
  out << "id";
  for (const auto& name : d.schema.flat_feature_names()) out << ',' << csv::escape_field(name);
  if (d.group_labels) out << ',' << kGroupColumn;
  out << '\n';
  for (Eigen::Index i = 0; i < d.n_rows(); ++i) {
    out << csv::escape_field(d.row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < d.n_cols(); ++j) {
      out << ',';
      if (d.mask(i, j)) out << csv::format_double(d.values(i, j));
    }
    if (d.group_labels) out << ',' << to_string((*d.group_labels)[static_cast<std::size_t>(i)]);
    out << '\n';
  }
}

namespace {

// id-keyed dense table (targets / confounders). Empty cells allowed only when
// allow_missing; those rows are reported through dropped_ids.
struct DenseTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  Eigen::MatrixXd values;
  std::set<std::string> dropped_ids;
};

DenseTable load_dense(const std::string& path, bool allow_missing_rows, const char* missing_code) {
  const csv::Table table = csv::read_file(path);
  require(!table.header.empty() && table.header[0] == "id", "MissingIdColumn",
          path + " must start with an 'id' column");
  DenseTable t;
  t.names.assign(table.header.begin() + 1, table.header.end());
  std::vector<std::vector<double>> rows;
  std::set<std::string> id_seen;
  for (const auto& row : table.rows) {
    const std::string& id = row[0];
    require(id_seen.insert(id).second, "DuplicateRowId", "row id '" + id + "' repeats in " + path);
    bool missing = false;
    std::vector<double> parsed;
    parsed.reserve(row.size() - 1);
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c].empty()) {
        missing = true;
        break;
      }
      parsed.push_back(parse_cell(row[c], id, table.header[c]));
    }
    if (missing) {
      if (!allow_missing_rows) {
        contract_fail(missing_code, "row '" + id + "' in " + path + " has empty cells");
      }
      t.dropped_ids.insert(id);
      continue;
    }
    t.ids.push_back(id);
    rows.push_back(std::move(parsed));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return t;
}

}  // namespace

LoadedTables load_joined(const std::string& features_path, const std::string& targets_path,
                         const std::string& confounders_path, const std::string& schema_path) {
  MultimodalDataset features = load_dataset(features_path, schema_path);
  DenseTable targets = load_dense(targets_path, /*allow_missing_rows=*/true, "MissingTarget");
  DenseTable confounders = load_dense(confounders_path, /*allow_missing_rows=*/false, "MissingConfounder");

  std::map<std::string, Eigen::Index> target_row, confounder_row;
  for (std::size_t i = 0; i < targets.ids.size(); ++i) {
    target_row[targets.ids[i]] = static_cast<Eigen::Index>(i);
  }
  for (std::size_t i = 0; i < confounders.ids.size(); ++i) {
    confounder_row[confounders.ids[i]] = static_cast<Eigen::Index>(i);
  }

  // Ids must agree across the three files; rows with empty targets are
  // excluded everywhere so the TargetMatrix stays dense.
  std::vector<Eigen::Index> keep_feature_rows;
  std::vector<Eigen::Index> keep_target_rows, keep_conf_rows;
  for (Eigen::Index i = 0; i < features.n_rows(); ++i) {
    const std::string& id = features.row_ids[static_cast<std::size_t>(i)];
    if (targets.dropped_ids.count(id)) continue;
    auto ti = target_row.find(id);
    if (ti == target_row.end()) {
      contract_fail("UnmatchedId", "feature row '" + id + "' has no row in " + targets_path);
    }
    auto ci = confounder_row.find(id);
    if (ci == confounder_row.end()) {
      contract_fail("UnmatchedId", "feature row '" + id + "' has no row in " + confounders_path);
    }
    keep_feature_rows.push_back(i);
    keep_target_rows.push_back(ti->second);
    keep_conf_rows.push_back(ci->second);
  }
  std::set<std::string> feature_ids(features.row_ids.begin(), features.row_ids.end());
  for (const auto& id : targets.ids) {
    if (!feature_ids.count(id)) {
      contract_fail("UnmatchedId", "target row '" + id + "' has no feature row");
    }
  }
  for (const auto& id : confounders.ids) {
    if (!feature_ids.count(id)) {
      contract_fail("UnmatchedId", "confounder row '" + id + "' has no feature row");
    }
  }
  require(!keep_feature_rows.empty(), "EmptyDataset", "no rows survive the target join");

  LoadedTables out;
  out.features = features.subset_rows(keep_feature_rows);
  out.targets.target_names = targets.names;
  out.targets.values.resize(static_cast<Eigen::Index>(keep_target_rows.size()), targets.values.cols());
  out.confounders.names = confounders.names;
  out.confounders.values.resize(static_cast<Eigen::Index>(keep_conf_rows.size()), confounders.values.cols());
  for (std::size_t i = 0; i < keep_target_rows.size(); ++i) {
    out.targets.values.row(static_cast<Eigen::Index>(i)) = targets.values.row(keep_target_rows[i]);
    out.confounders.values.row(static_cast<Eigen::Index>(i)) = confounders.values.row(keep_conf_rows[i]);
  }
  for (Eigen::Index j = 0; j < out.confounders.values.cols(); ++j) {
    const Eigen::VectorXd col = out.confounders.values.col(j);
    require((col.array() != col(0)).any(), "ConstantConfounder",
            "confounder '" + out.confounders.names[static_cast<std::size_t>(j)] +
                "' is constant; the intercept is added internally");
  }
  return out;
}

namespace {

void save_dense(const Eigen::MatrixXd& values, const std::vector<std::string>& names,
                const std::vector<std::string>& row_ids, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) contract_fail("FileNotWritable", "cannot write " + path);
  out << "id";
  for (const auto& name : names) out << ',' << csv::escape_field(name);
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << csv::escape_field(row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << ',' << csv::format_double(values(i, j));
    }
    out << '\n';
  }
}

}  // namespace

void save_targets(const TargetMatrix& t, const std::vector<std::string>& row_ids,
                  const std::string& path) {
  save_dense(t.values, t.target_names, row_ids, path);
}

void save_confounders(const ConfounderMatrix& c, const std::vector<std::string>& row_ids,
                      const std::string& path) {
  save_dense(c.values, c.names, row_ids, path);
}

// ---- synthetic generation -------------------------------------------------

DatasetSchema default_synthetic_schema() {
  DatasetSchema schema;
  auto add = [&](const std::string& name, ModalityKind kind, int width, const std::string& prefix) {
    ModalitySchema m;
    m.modality_id = static_cast<int>(schema.modalities.size()) + 1;
    m.name = name;
    m.kind = kind;
    for (int i = 0; i < width; ++i) m.feature_names.push_back(prefix + std::to_string(i + 1));
    schema.modalities.push_back(std::move(m));
  };
  add("imaging", ModalityKind::continuous, 4, "img_");
  add("fluid", ModalityKind::continuous, 3, "csf_");
  add("expression", ModalityKind::continuous, 3, "gene_");
  add("genotype", ModalityKind::ordinal, 2, "allele_");
  schema.target_names = {"executive", "language", "memory", "visuospatial"};
  schema.confounder_names = {"age", "gender", "education"};
  return schema;
}

SyntheticData generate_synthetic(Eigen::Index n_rows, const DatasetSchema& schema,
                                 const SyntheticConfig& config, std::uint64_t seed) {
  schema.validate();
  require(n_rows >= 2, "InvalidRate", "n_rows must be at least 2");
  require(config.missingness_rate >= 0.0 && config.missingness_rate < 1.0, "InvalidRate",
          "missingness_rate must lie in [0, 1)");
  const int p = schema.n_features();
  const int n_targets = config.n_targets;
  const int n_conf = config.n_confounders;
  require(n_targets >= 1 && n_conf >= 1, "InvalidRate", "targets and confounders must be >= 1");

  Rng rng(seed);

  SyntheticData out;
  out.truth.noise_sd = config.noise_sd;
  out.truth.missingness_rate = config.missingness_rate;
  out.truth.seed = seed;
  if (config.weights) {
    require(config.weights->rows() == p && config.weights->cols() == n_targets, "ShapeMismatch",
            "supplied weights must be n_features x n_targets");
    out.truth.weights = *config.weights;
  } else {
    out.truth.weights.resize(p, n_targets);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index t = 0; t < n_targets; ++t) out.truth.weights(i, t) = rng.normal(0.0, scale);
    }
  }
  out.truth.beta_true.resize(n_conf, n_targets);
  for (Eigen::Index c = 0; c < n_conf; ++c) {
    for (Eigen::Index t = 0; t < n_targets; ++t) out.truth.beta_true(c, t) = rng.normal(0.0, 0.5);
  }

  // Feature values: twins duplicate the previous row's values.
  Eigen::MatrixXd x(n_rows, p);
  const bool twins = config.mode == MissingnessMode::block_twin;
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    if (twins && i % 2 == 1) {
      x.row(i) = x.row(i - 1);
      continue;
    }
    int col = 0;
    for (const auto& m : schema.modalities) {
      for (int f = 0; f < m.width(); ++f, ++col) {
        x(i, col) = m.kind == ModalityKind::continuous
                        ? rng.normal(static_cast<double>(m.modality_id), 1.0)
                        : static_cast<double>(rng.below(3));
      }
    }
  }

  Eigen::MatrixXd z(n_rows, n_conf);
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    for (Eigen::Index c = 0; c < n_conf; ++c) z(i, c) = rng.normal(0.0, 1.0);
  }

  Eigen::MatrixXd y = x * out.truth.weights + z * out.truth.beta_true;
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    for (Eigen::Index t = 0; t < n_targets; ++t) y(i, t) += rng.normal(0.0, config.noise_sd);
  }

  // Missingness mask. Rows are resampled until something stays observed.
  const int n_mod = schema.n_modalities();
  BoolMask mask = BoolMask::Constant(n_rows, p, true);
  const double rate = config.missingness_rate;
  if (rate > 0.0) {
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      if (twins && i % 2 == 0) continue;  // first copy of each pair stays complete
      if (config.mode == MissingnessMode::cellwise) {
        bool any_observed;
        do {
          any_observed = false;
          for (Eigen::Index j = 0; j < p; ++j) {
            mask(i, j) = !rng.bernoulli(rate);
            any_observed = any_observed || mask(i, j);
          }
        } while (!any_observed);
      } else {
        std::vector<bool> drop(static_cast<std::size_t>(n_mod));
        bool all_dropped;
        do {
          all_dropped = true;
          for (int m = 0; m < n_mod; ++m) {
            drop[static_cast<std::size_t>(m)] = rng.bernoulli(rate);
            all_dropped = all_dropped && drop[static_cast<std::size_t>(m)];
          }
        } while (all_dropped);
        for (int m = 0; m < n_mod; ++m) {
          if (!drop[static_cast<std::size_t>(m)]) continue;
          const auto [begin, end] = schema.column_range(m);
          for (int j = begin; j < end; ++j) mask(i, j) = false;
        }
      }
    }
  }

  out.dataset.schema = schema;
  out.dataset.values = x;
  out.dataset.mask = mask;
  // Cells under the mask keep their generated values in complete_values only.
  out.complete_values = x;
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!mask(i, j)) out.dataset.values(i, j) = 0.0;
    }
  }
  out.dataset.row_ids.reserve(static_cast<std::size_t>(n_rows));
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    out.dataset.row_ids.push_back("s" + std::to_string(i + 1));
  }

  out.targets.values = y;
  out.targets.target_names = schema.target_names;
  if (out.targets.target_names.empty()) {
    for (int t = 0; t < n_targets; ++t) out.targets.target_names.push_back("y" + std::to_string(t + 1));
  }
  require(static_cast<int>(out.targets.target_names.size()) == n_targets, "ShapeMismatch",
          "schema target names do not match n_targets");

  out.confounders.values = z;
  out.confounders.names = schema.confounder_names;
  if (out.confounders.names.empty()) {
    for (int c = 0; c < n_conf; ++c) out.confounders.names.push_back("z" + std::to_string(c + 1));
  }
  require(static_cast<int>(out.confounders.names.size()) == n_conf, "ShapeMismatch",
          "schema confounder names do not match n_confounders");

  out.dataset.validate();
  return out;
}

}  // namespace m2m

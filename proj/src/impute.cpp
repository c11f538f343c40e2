#include "m2m/impute.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "m2m/csv.hpp"
#include "m2m/errors.hpp"
#include "m2m/parallel.hpp"

namespace m2m {

using nlohmann::json;

std::string to_string(ImputeMethod method) {
  switch (method) {
    case ImputeMethod::mean: return "mean";
    case ImputeMethod::most_frequent: return "most_frequent";
    case ImputeMethod::constant: return "constant";
    case ImputeMethod::knn: return "knn";
    default: return "iterative";
  }
}

ImputeMethod impute_method_from_string(const std::string& text) {
  if (text == "mean") return ImputeMethod::mean;
  if (text == "most_frequent") return ImputeMethod::most_frequent;
  if (text == "constant") return ImputeMethod::constant;
  if (text == "knn") return ImputeMethod::knn;
  if (text == "iterative") return ImputeMethod::iterative;
  contract_fail("UnknownImputer", "imputation method '" + text + "'");
}

bool ImputerSpec::applies_to(ModalityKind kind) const {
  switch (method) {
    case ImputeMethod::mean:
    case ImputeMethod::iterative:
      return kind == ModalityKind::continuous;
    case ImputeMethod::most_frequent:
    case ImputeMethod::constant:
      return kind == ModalityKind::ordinal;
    case ImputeMethod::knn:
      return true;
  }
  return false;
}

std::string ImputerSpec::label() const {
  switch (method) {
    case ImputeMethod::knn:
      return "knn(" + std::to_string(k) + ")";
    case ImputeMethod::constant:
      return "constant(" + csv::format_double(constant_value) + ")";
    default:
      return to_string(method);
  }
}

void ImputerSpec::validate() const {
  if (method == ImputeMethod::knn) require(k >= 1, "InvalidImputerSpec", "knn needs k >= 1");
  if (method == ImputeMethod::iterative) {
    require(max_rounds >= 1, "InvalidImputerSpec", "iterative needs max_rounds >= 1");
    require(ridge_lambda >= 0.0, "InvalidImputerSpec", "ridge_lambda must be non-negative");
  }
}

json ImputerSpec::to_json() const {
  json doc{{"method", to_string(method)}};
  if (method == ImputeMethod::knn) {
    doc["k"] = k;
    if (normalized_distance) doc["normalized_distance"] = true;
  }
  if (method == ImputeMethod::constant) doc["value"] = constant_value;
  if (method == ImputeMethod::iterative) {
    doc["max_rounds"] = max_rounds;
    doc["ridge_lambda"] = ridge_lambda;
  }
  return doc;
}

ImputerSpec ImputerSpec::from_json(const json& doc) {
  ImputerSpec spec;
  spec.method = impute_method_from_string(doc.at("method").get<std::string>());
  if (doc.contains("k")) spec.k = doc["k"].get<int>();
  if (doc.contains("value")) spec.constant_value = doc["value"].get<double>();
  if (doc.contains("max_rounds")) spec.max_rounds = doc["max_rounds"].get<int>();
  if (doc.contains("ridge_lambda")) spec.ridge_lambda = doc["ridge_lambda"].get<double>();
  if (doc.contains("normalized_distance")) {
    spec.normalized_distance = doc["normalized_distance"].get<bool>();
  }
  spec.validate();
  return spec;
}

json ImputerPlan::to_json(const DatasetSchema& schema) const {
  json doc = json::object();
  for (const auto& [id, spec] : by_modality) {
    doc["modality:" + schema.modalities[static_cast<std::size_t>(id - 1)].name] = spec.to_json();
  }
  return doc;
}

ImputerPlan ImputerPlan::resolve(const json& doc, const DatasetSchema& schema) {
  ImputerPlan plan;
  for (const auto& [key, value] : doc.items()) {
    const ImputerSpec spec = ImputerSpec::from_json(value);
    if (key == "continuous" || key == "ordinal") {
      const ModalityKind kind = modality_kind_from_string(key);
      require(spec.applies_to(kind), "InvalidImputerSpec",
              spec.label() + " does not apply to " + key + " modalities");
      for (const auto& m : schema.modalities) {
        if (m.kind == kind) plan.by_modality[m.modality_id] = spec;
      }
      continue;
    }
    if (key.rfind("modality:", 0) == 0) {
      const std::string name = key.substr(9);
      bool found = false;
      for (const auto& m : schema.modalities) {
        if (m.name != name) continue;
        require(spec.applies_to(m.kind), "InvalidImputerSpec",
                spec.label() + " does not apply to modality '" + name + "'");
        plan.by_modality[m.modality_id] = spec;
        found = true;
      }
      require(found, "UnknownModality", "imputer plan names unknown modality '" + name + "'");
      continue;
    }
    contract_fail("InvalidImputerSpec", "unrecognized imputer plan key '" + key + "'");
  }
  return plan;
}

ImputerPlan ImputerPlan::uniform(const ImputerSpec& spec, const DatasetSchema& schema) {
  ImputerPlan plan;
  for (const auto& m : schema.modalities) {
    if (spec.applies_to(m.kind)) plan.by_modality[m.modality_id] = spec;
  }
  return plan;
}

std::string ImputerPlan::label(const DatasetSchema& schema) const {
  // Collapse identical per-kind assignments for readable report rows.
  std::map<std::string, std::set<std::string>> by_label;
  for (const auto& [id, spec] : by_modality) {
    const auto& m = schema.modalities[static_cast<std::size_t>(id - 1)];
    by_label[spec.label()].insert(to_string(m.kind));
  }
  std::string out;
  for (const auto& [label, kinds] : by_label) {
    if (!out.empty()) out += "+";
    out += label;
  }
  return out.empty() ? "none" : out;
}

// ---- fitting ---------------------------------------------------------------

FittedImputer FittedImputer::fit(const ImputerSpec& spec, const MultimodalDataset& train) {
  return fit(ImputerPlan::uniform(spec, train.schema), train);
}

FittedImputer FittedImputer::fit(const ImputerPlan& plan, const MultimodalDataset& train) {
  train.validate();
  FittedImputer f;
  f.plan_ = plan;
  f.schema_ = train.schema;
  f.train_ids_ = train.row_ids;
  f.train_raw_ = train.values;
  f.train_mask_ = train.mask;
  f.stats_ = Standardizer::fit(train.values, &train.mask);

  bool any_knn = false;
  bool any_iterative = false;
  const ImputerSpec* iterative_spec = nullptr;
  for (const auto& [id, spec] : plan.by_modality) {
    spec.validate();
    require(id >= 1 && id <= train.schema.n_modalities(), "UnknownModality",
            "plan references modality id " + std::to_string(id));
    const auto& m = train.schema.modalities[static_cast<std::size_t>(id - 1)];
    require(spec.applies_to(m.kind), "InvalidImputerSpec",
            spec.label() + " does not apply to " + to_string(m.kind) + " modality '" + m.name + "'");
    if (spec.method == ImputeMethod::knn) {
      any_knn = true;
      require(train.n_rows() >= spec.k, "TooFewRows",
              "knn(" + std::to_string(spec.k) + ") needs at least k training rows");
    }
    if (spec.method == ImputeMethod::iterative) {
      any_iterative = true;
      iterative_spec = &spec;
    }
  }

  // Column statistics for every column covered by the plan; columns whose
  // method needs a statistic must have at least one observed training cell.
  f.column_means_ = Eigen::VectorXd::Zero(train.n_cols());
  f.column_modes_ = Eigen::VectorXd::Zero(train.n_cols());
  for (Eigen::Index j = 0; j < train.n_cols(); ++j) {
    const int mi = train.modality_of_column(j);
    const int id = train.schema.modalities[static_cast<std::size_t>(mi)].modality_id;
    auto it = plan.by_modality.find(id);
    const bool covered = it != plan.by_modality.end();
    const bool needs_stats =
        covered && it->second.method != ImputeMethod::constant;
    double sum = 0.0;
    Eigen::Index n = 0;
    std::map<double, Eigen::Index> counts;
    for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
      if (!train.mask(i, j)) continue;
      sum += train.values(i, j);
      ++counts[train.values(i, j)];
      ++n;
    }
    if (n == 0) {
      if (needs_stats) {
        contract_fail("AllMissingColumn",
                      "column '" + train.schema.flat_feature_names()[static_cast<std::size_t>(j)] +
                          "' has no observed training values");
      }
      continue;
    }
    f.column_means_(j) = sum / static_cast<double>(n);
    Eigen::Index best_count = 0;
    double mode = 0.0;
    for (const auto& [value, count] : counts) {  // map order: smallest value wins ties
      if (count > best_count) {
        best_count = count;
        mode = value;
      }
    }
    f.column_modes_(j) = mode;
  }

  for (Eigen::Index j = 0; j < train.n_cols(); ++j) {
    if (train.kind_of_column(j) == ModalityKind::continuous) {
      f.continuous_cols_.push_back(static_cast<int>(j));
    }
  }

  if (any_knn || any_iterative) {
    f.train_std_ = f.stats_.transform(train.values);
    for (Eigen::Index i = 0; i < train.n_rows(); ++i) {
      for (Eigen::Index j = 0; j < train.n_cols(); ++j) {
        if (!train.mask(i, j)) f.train_std_(i, j) = 0.0;
      }
    }
  }
  if (any_iterative) {
    std::set<int> covered;
    for (int j : f.continuous_cols_) {
      const int mi = train.modality_of_column(j);
      const int id = train.schema.modalities[static_cast<std::size_t>(mi)].modality_id;
      auto it = plan.by_modality.find(id);
      if (it != plan.by_modality.end() && it->second.method == ImputeMethod::iterative) {
        covered.insert(j);
      }
    }
    f.fit_iterative_coefs(covered, iterative_spec->max_rounds, iterative_spec->ridge_lambda);
  }
  return f;
}

// Chained-equations sweeps on the standardized training matrix. Missing cells
// start at the column mean (zero in standardized space); each sweep refits a
// ridge per feature on the rows observing it and re-predicts that feature's
// missing cells, one feature at a time in schema order.
void FittedImputer::fit_iterative_coefs(const std::set<int>& covered_cols, int max_rounds,
                                        double lambda) {
  const auto& cont = continuous_cols_;
  const Eigen::Index n = train_std_.rows();
  Eigen::MatrixXd work = train_std_;  // unobserved cells already zeroed

  ridge_coefs_.assign(cont.size(), Eigen::VectorXd());
  for (int round = 0; round < max_rounds; ++round) {
    double max_change = 0.0;
    for (std::size_t c = 0; c < cont.size(); ++c) {
      const int j = cont[c];
      if (!covered_cols.count(j)) continue;
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (train_mask_(i, j)) rows.push_back(i);
      }
      if (rows.empty()) continue;  // column untouched by this plan
      const Eigen::Index d = static_cast<Eigen::Index>(cont.size());  // intercept + others
      Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), d);
      Eigen::VectorXd response(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        design(static_cast<Eigen::Index>(r), 0) = 1.0;
        Eigen::Index at = 1;
        for (std::size_t o = 0; o < cont.size(); ++o) {
          if (o == c) continue;
          design(static_cast<Eigen::Index>(r), at++) = work(rows[r], cont[o]);
        }
        response(static_cast<Eigen::Index>(r)) = work(rows[r], j);
      }
      Eigen::MatrixXd gram = design.transpose() * design;
      for (Eigen::Index t = 1; t < d; ++t) gram(t, t) += lambda;  // intercept unpenalized
      const Eigen::VectorXd theta = gram.ldlt().solve(design.transpose() * response);
      ridge_coefs_[c] = theta;

      for (Eigen::Index i = 0; i < n; ++i) {
        if (train_mask_(i, j)) continue;
        double pred = theta(0);
        Eigen::Index at = 1;
        for (std::size_t o = 0; o < cont.size(); ++o) {
          if (o == c) continue;
          pred += theta(at++) * work(i, cont[o]);
        }
        max_change = std::max(max_change, std::abs(pred - work(i, j)));
        work(i, j) = pred;
      }
    }
    if (max_change < 1e-6) break;
  }
}

// ---- filling ---------------------------------------------------------------

MultimodalDataset FittedImputer::fill(const MultimodalDataset& target, ImputeTrace* trace) const {
  require(target.schema.flat_feature_names() == schema_.flat_feature_names(), "SchemaMismatch",
          "target schema differs from the training schema");

  MultimodalDataset out = target;
  std::set<int> knn_cols, iter_cols;
  std::map<int, const ImputerSpec*> col_spec;
  const ImputerSpec* iterative_spec = nullptr;

  for (Eigen::Index j = 0; j < target.n_cols(); ++j) {
    const int mi = target.modality_of_column(j);
    const int id = schema_.modalities[static_cast<std::size_t>(mi)].modality_id;
    auto it = plan_.by_modality.find(id);
    if (it == plan_.by_modality.end()) continue;
    const ImputerSpec& spec = it->second;
    col_spec[static_cast<int>(j)] = &spec;
    switch (spec.method) {
      case ImputeMethod::mean:
        for (Eigen::Index i = 0; i < target.n_rows(); ++i) {
          if (!target.mask(i, j)) out.values(i, j) = column_means_(j);
        }
        break;
      case ImputeMethod::most_frequent:
        for (Eigen::Index i = 0; i < target.n_rows(); ++i) {
          if (!target.mask(i, j)) out.values(i, j) = column_modes_(j);
        }
        break;
      case ImputeMethod::constant:
        for (Eigen::Index i = 0; i < target.n_rows(); ++i) {
          if (!target.mask(i, j)) out.values(i, j) = spec.constant_value;
        }
        break;
      case ImputeMethod::knn:
        knn_cols.insert(static_cast<int>(j));
        break;
      case ImputeMethod::iterative:
        iter_cols.insert(static_cast<int>(j));
        iterative_spec = &spec;
        break;
    }
  }

  if (!knn_cols.empty()) fill_knn(target, knn_cols, col_spec, out.values, trace);
  if (!iter_cols.empty()) fill_iterative(target, iter_cols, *iterative_spec, out.values);

  for (Eigen::Index j = 0; j < target.n_cols(); ++j) {
    const int mi = target.modality_of_column(j);
    const int id = schema_.modalities[static_cast<std::size_t>(mi)].modality_id;
    if (!plan_.by_modality.count(id)) continue;
    for (Eigen::Index i = 0; i < target.n_rows(); ++i) out.mask(i, j) = true;
  }
  return out;
}

// Distances are Euclidean over the features observed in both rows, computed
// on standardized values so no column dominates the metric; fills come from
// the neighbors' original-scale values so a zero-distance twin restores cells
// bit-exactly. Neighbor candidates for a feature are the training rows that
// observe it; ties break toward the lowest training row index.
void FittedImputer::fill_knn(const MultimodalDataset& target, const std::set<int>& knn_cols,
                             const std::map<int, const ImputerSpec*>& col_spec,
                             Eigen::MatrixXd& out, ImputeTrace* trace) const {
  const Eigen::Index n_train = train_raw_.rows();
  const Eigen::Index n_cols = target.n_cols();

  Eigen::MatrixXd target_std = stats_.transform(target.values);
  std::vector<std::set<std::string>> row_neighbors(
      trace ? static_cast<std::size_t>(target.n_rows()) : 0);

  parallel_for(static_cast<std::size_t>(target.n_rows()), [&](std::size_t row) {
    const Eigen::Index i = static_cast<Eigen::Index>(row);
    bool needs_fill = false;
    for (int j : knn_cols) {
      if (!target.mask(i, j)) {
        needs_fill = true;
        break;
      }
    }
    if (!needs_fill) return;

    // One distance pass per target row; the candidate filter per feature
    // reuses it.
    Eigen::VectorXd dist2(n_train);
    Eigen::VectorXi shared(n_train);
    for (Eigen::Index t = 0; t < n_train; ++t) {
      double d2 = 0.0;
      int co = 0;
      for (Eigen::Index l = 0; l < n_cols; ++l) {
        if (!target.mask(i, l) || !train_mask_(t, l)) continue;
        const double diff = target_std(i, l) - train_std_(t, l);
        d2 += diff * diff;
        ++co;
      }
      dist2(t) = d2;
      shared(t) = co;
    }
    bool any_shared = false;
    for (Eigen::Index t = 0; t < n_train; ++t) {
      if (shared(t) > 0) {
        any_shared = true;
        break;
      }
    }
    if (!any_shared) {
      contract_fail("NoCoObservedFeatures",
                    "row '" + target.row_ids[row] + "' shares no observed feature with any training row");
    }

    for (int j : knn_cols) {
      if (target.mask(i, j)) continue;
      const ImputerSpec& spec = *col_spec.at(j);
      // (distance, train row) for candidates observing feature j.
      std::vector<std::pair<double, Eigen::Index>> candidates;
      for (Eigen::Index t = 0; t < n_train; ++t) {
        if (!train_mask_(t, j) || shared(t) == 0) continue;
        const double d2 = spec.normalized_distance ? dist2(t) / shared(t) : dist2(t);
        candidates.emplace_back(d2, t);
      }
      if (candidates.empty()) {
        contract_fail("NoCoObservedFeatures",
                      "no training row both observes feature column " + std::to_string(j) +
                          " and shares features with row '" + target.row_ids[row] + "'");
      }
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(spec.k),
                                                     candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                        candidates.end());
      double sum = 0.0;
      for (std::size_t c = 0; c < take; ++c) {
        sum += train_raw_(candidates[c].second, j);
        if (trace) {
          row_neighbors[row].insert(train_ids_[static_cast<std::size_t>(candidates[c].second)]);
        }
      }
      out(i, j) = take == 1 ? train_raw_(candidates[0].second, j)
                            : sum / static_cast<double>(take);
    }
  });

  if (trace) {
    for (std::size_t row = 0; row < row_neighbors.size(); ++row) {
      if (row_neighbors[row].empty()) continue;
      auto& bucket = trace->knn_neighbors[target.row_ids[row]];
      bucket.insert(row_neighbors[row].begin(), row_neighbors[row].end());
    }
  }
}

// Applies the fitted per-feature ridge coefficients to the target rows:
// missing cells start at the column mean and are re-predicted sweep by sweep
// until the largest change falls under 1e-6.
void FittedImputer::fill_iterative(const MultimodalDataset& target, const std::set<int>& iter_cols,
                                   const ImputerSpec& spec, Eigen::MatrixXd& out) const {
  const auto& cont = continuous_cols_;
  Eigen::MatrixXd work = stats_.transform(target.values);
  for (Eigen::Index i = 0; i < target.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < target.n_cols(); ++j) {
      if (!target.mask(i, j)) work(i, j) = 0.0;  // standardized column mean
    }
  }

  for (int round = 0; round < spec.max_rounds; ++round) {
    double max_change = 0.0;
    for (std::size_t c = 0; c < cont.size(); ++c) {
      const int j = cont[c];
      if (!iter_cols.count(j)) continue;
      const Eigen::VectorXd& theta = ridge_coefs_[c];
      if (theta.size() == 0) continue;
      for (Eigen::Index i = 0; i < target.n_rows(); ++i) {
        if (target.mask(i, j)) continue;
        double pred = theta(0);
        Eigen::Index at = 1;
        for (std::size_t o = 0; o < cont.size(); ++o) {
          if (o == c) continue;
          pred += theta(at++) * work(i, cont[o]);
        }
        max_change = std::max(max_change, std::abs(pred - work(i, static_cast<Eigen::Index>(j))));
        work(i, j) = pred;
      }
    }
    if (max_change < 1e-6) break;
  }

  for (int j : iter_cols) {
    for (Eigen::Index i = 0; i < target.n_rows(); ++i) {
      if (!target.mask(i, j)) out(i, j) = stats_.inverse_cell(j, work(i, j));
    }
  }
}

CompletedDataset FittedImputer::impute(const MultimodalDataset& target, ImputeTrace* trace) const {
  CompletedDataset completed;
  completed.data = fill(target, trace);
  completed.provenance = plan_;
  for (Eigen::Index j = 0; j < completed.data.n_cols(); ++j) {
    for (Eigen::Index i = 0; i < completed.data.n_rows(); ++i) {
      if (!completed.data.mask(i, j)) {
        const int mi = completed.data.modality_of_column(j);
        contract_fail("IncompletePlan",
                      "modality '" + schema_.modalities[static_cast<std::size_t>(mi)].name +
                          "' has missing cells but no imputer in the plan");
      }
    }
  }
  return completed;
}

// ---- selection --------------------------------------------------------------

std::vector<ImputerSpec> default_imputer_catalog() {
  std::vector<ImputerSpec> catalog;
  ImputerSpec mean;
  mean.method = ImputeMethod::mean;
  catalog.push_back(mean);
  for (int k : {1, 2, 5}) {
    ImputerSpec knn;
    knn.method = ImputeMethod::knn;
    knn.k = k;
    catalog.push_back(knn);
  }
  ImputerSpec iterative;
  iterative.method = ImputeMethod::iterative;
  catalog.push_back(iterative);
  ImputerSpec most_frequent;
  most_frequent.method = ImputeMethod::most_frequent;
  catalog.push_back(most_frequent);
  ImputerSpec constant;
  constant.method = ImputeMethod::constant;
  constant.constant_value = -1.0;
  catalog.push_back(constant);
  return catalog;
}

ImputerSelectionReport select_imputer(const std::vector<ImputerSpec>& candidates,
                                      const MultimodalDataset& data, int k_bins, double eps) {
  require(!candidates.empty(), "NoApplicableCandidate", "candidate list is empty");
  data.validate();
  ImputerSelectionReport report;
  report.k_bins = k_bins;
  report.eps = eps;

  bool any_missing = false;
  for (int mi = 0; mi < data.schema.n_modalities(); ++mi) {
    const auto& modality = data.schema.modalities[static_cast<std::size_t>(mi)];
    const auto [begin, end] = data.schema.column_range(mi);
    bool modality_missing = false;
    for (int j = begin; j < end && !modality_missing; ++j) {
      for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        if (!data.mask(i, j)) {
          modality_missing = true;
          break;
        }
      }
    }
    if (!modality_missing) continue;
    any_missing = true;

    std::vector<std::size_t> applicable;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (candidates[c].applies_to(modality.kind)) applicable.push_back(c);
    }
    require(!applicable.empty(), "NoApplicableCandidate",
            "no candidate applies to modality '" + modality.name + "'");

    std::vector<ImputerSelectionReport::Row> rows(applicable.size());
    parallel_for(applicable.size(), [&](std::size_t a) {
      const ImputerSpec& spec = candidates[applicable[a]];
      ImputerPlan plan;
      plan.by_modality[modality.modality_id] = spec;
      const FittedImputer fitted = FittedImputer::fit(plan, data);
      const MultimodalDataset filled = fitted.fill(data);

      double kl_sum = 0.0;
      int kl_features = 0;
      for (int j = begin; j < end; ++j) {
        std::vector<double> observed, imputed;
        for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
          if (data.mask(i, j)) observed.push_back(data.values(i, j));
          else imputed.push_back(filled.values(i, j));
        }
        if (observed.empty() || imputed.empty()) continue;
        const auto pair = shared_bins(observed, imputed, k_bins);
        kl_sum += kl_divergence(pair, eps);
        ++kl_features;
      }
      ImputerSelectionReport::Row row;
      row.modality_id = modality.modality_id;
      row.modality = modality.name;
      row.spec = spec;
      row.kl_sum = kl_sum;
      row.kl_mean = kl_features > 0 ? kl_sum / kl_features : 0.0;
      rows[a] = std::move(row);
    });

    std::size_t best = 0;
    for (std::size_t a = 1; a < rows.size(); ++a) {
      if (rows[a].kl_sum < rows[best].kl_sum) best = a;  // ties keep catalog order
    }
    rows[best].chosen = true;
    report.chosen.by_modality[modality.modality_id] = rows[best].spec;
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }

  require(any_missing, "NoMissingCells", "nothing to score: the dataset is complete");
  return report;
}

void write_selection_csv(const ImputerSelectionReport& report, const DatasetSchema& schema,
                         const std::string& path) {
  (void)schema;
  std::ofstream out(path, std::ios::binary);
  if (!out) contract_fail("FileNotWritable", "cannot write " + path);
  out << "modality,imputer,kl_sum,kl_mean,chosen,bins,eps\n";
  for (const auto& row : report.rows) {
    out << csv::escape_field(row.modality) << ',' << csv::escape_field(row.spec.label()) << ','
        << csv::format_double(row.kl_sum) << ',' << csv::format_double(row.kl_mean) << ','
        << (row.chosen ? 1 : 0) << ',' << report.k_bins << ',' << csv::format_double(report.eps)
        << '\n';
  }
}

}  // namespace m2m

#include "m2m/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "m2m/csv.hpp"
#include "m2m/divergence.hpp"
#include "m2m/errors.hpp"
#include "m2m/parallel.hpp"
#include "m2m/rng.hpp"

namespace m2m {

using nlohmann::json;

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::train_test: return "train_test";
    case ScenarioKind::loco: return "loco";
    default: return "lomo";
  }
}

ScenarioKind scenario_kind_from_string(const std::string& text) {
  if (text == "train_test") return ScenarioKind::train_test;
  if (text == "loco") return ScenarioKind::loco;
  if (text == "lomo") return ScenarioKind::lomo;
  contract_fail("UnknownScenario", "scenario '" + text + "'");
}

// ---- ModelSpec -----------------------------------------------------------------

std::string ModelSpec::label() const {
  if (kind == Kind::attentive) {
    return "attentive(steps=" + std::to_string(attentive.n_steps) + ")";
  }
  return predictor.label();
}

json ModelSpec::to_json() const {
  if (kind == Kind::attentive) {
    return {{"kind", "attentive"},
            {"n_steps", attentive.n_steps},
            {"gamma", attentive.gamma},
            {"hidden_dim", attentive.hidden_dim},
            {"learning_rate", attentive.learning_rate},
            {"batch_size", attentive.batch_size},
            {"epochs", attentive.epochs},
            {"seed", attentive.seed}};
  }
  json doc{{"kind", to_string(predictor.kind)}};
  if (kind == Kind::multitask_en) {
    doc["alpha"] = predictor.alpha;
    doc["l1_ratio"] = predictor.l1_ratio;
    doc["max_iter"] = predictor.max_iter;
    doc["tol"] = predictor.tol;
  }
  if (kind == Kind::pls) doc["n_components"] = predictor.n_components;
  return doc;
}

ModelSpec ModelSpec::from_json(const json& doc) {
  ModelSpec spec;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "attentive") {
    spec.kind = Kind::attentive;
    auto& a = spec.attentive;
    if (doc.contains("n_steps")) a.n_steps = doc["n_steps"].get<int>();
    if (doc.contains("gamma")) a.gamma = doc["gamma"].get<double>();
    if (doc.contains("hidden_dim")) a.hidden_dim = doc["hidden_dim"].get<int>();
    if (doc.contains("learning_rate")) a.learning_rate = doc["learning_rate"].get<double>();
    if (doc.contains("batch_size")) a.batch_size = doc["batch_size"].get<int>();
    if (doc.contains("epochs")) a.epochs = doc["epochs"].get<int>();
    if (doc.contains("seed")) a.seed = doc["seed"].get<std::uint64_t>();
    a.validate();
    return spec;
  }
  spec.predictor.kind = predictor_kind_from_string(kind);
  spec.kind = spec.predictor.kind == PredictorKind::linear ? Kind::linear
              : spec.predictor.kind == PredictorKind::multitask_en ? Kind::multitask_en
                                                                   : Kind::pls;
  auto& p = spec.predictor;
  if (doc.contains("alpha")) p.alpha = doc["alpha"].get<double>();
  if (doc.contains("l1_ratio")) p.l1_ratio = doc["l1_ratio"].get<double>();
  if (doc.contains("max_iter")) p.max_iter = doc["max_iter"].get<int>();
  if (doc.contains("tol")) p.tol = doc["tol"].get<double>();
  if (doc.contains("n_components")) p.n_components = doc["n_components"].get<int>();
  if (doc.contains("ridge_fallback")) p.ridge_fallback = doc["ridge_fallback"].get<bool>();
  return spec;
}

Eigen::MatrixXd TrainedPredictor::predict(const Eigen::MatrixXd& x) const {
  if (attentive) return attentive->predict(x);
  require(linear_like.has_value(), "ShapeMismatch", "predictor was never fitted");
  return linear_like->predict(x);
}

PredictFn TrainedPredictor::as_fn() const {
  return [this](const Eigen::MatrixXd& x) { return predict(x); };
}

TrainedPredictor fit_model(const ModelSpec& spec, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& y) {
  TrainedPredictor trained;
  if (spec.kind == ModelSpec::Kind::attentive) {
    trained.attentive = AttentiveModel::train(spec.attentive, x, y);
  } else {
    trained.linear_like = PredictorModel::fit(spec.predictor, x, y);
  }
  return trained;
}

// ---- audit -----------------------------------------------------------------------

void LeakageAudit::record(int fold, const std::string& stage,
                          const std::vector<std::string>& consumed_ids,
                          const std::vector<std::string>& forbidden_ids) {
  entries.push_back({fold, stage, consumed_ids});
  const std::set<std::string> forbidden(forbidden_ids.begin(), forbidden_ids.end());
  for (const auto& id : consumed_ids) {
    if (forbidden.count(id)) {
      violations.push_back("fold " + std::to_string(fold) + ": stage " + stage +
                           " consumed test row '" + id + "'");
    }
  }
}

// ---- scenario execution -------------------------------------------------------------

namespace {

std::vector<Eigen::Index> indices_of(const MultimodalDataset& d,
                                     const std::vector<std::string>& ids) {
  std::map<std::string, Eigen::Index> lookup;
  for (std::size_t i = 0; i < d.row_ids.size(); ++i) {
    lookup[d.row_ids[i]] = static_cast<Eigen::Index>(i);
  }
  std::vector<Eigen::Index> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = lookup.find(id);
    require(it != lookup.end(), "UnmatchedId", "test id '" + id + "' not in the dataset");
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> sample_ids(const std::vector<std::string>& pool, int count,
                                    std::uint64_t seed) {
  require(count >= 1, "EmptyTestSet", "test_size must be at least 1 when test_ids are absent");
  require(count <= static_cast<int>(pool.size()), "EmptyTestSet",
          "test_size exceeds the eligible row count");
  std::vector<std::string> shuffled = pool;
  Rng rng(derive_seed(seed, 0x7e57));
  rng.shuffle(shuffled);
  shuffled.resize(static_cast<std::size_t>(count));
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

struct Fold {
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
};

struct FoldOutcome {
  Eigen::MatrixXd predictions;  // |test_rows| x T
  std::vector<LeakageAudit::Entry> audit_entries;
};

double sample_std(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<std::string> resolve_test_ids(const MultimodalDataset& dataset,
                                          const CvScenario& scenario) {
  const CompletenessSplit split = split_complete_incomplete(dataset);
  const std::set<std::string> complete(split.complete_ids.begin(), split.complete_ids.end());
  std::vector<std::string> test_ids = scenario.test_ids;
  switch (scenario.kind) {
    case ScenarioKind::train_test: {
      if (test_ids.empty()) {
        test_ids = sample_ids(split.complete_ids, scenario.test_size, scenario.seed);
      }
      require(!test_ids.empty(), "EmptyTestSet", "train_test needs a non-empty test set");
      if (!scenario.skip_test_id_validation) {
        for (const auto& id : test_ids) {
          require(complete.count(id) > 0, "TestRowIncomplete",
                  "test row '" + id + "' has missing cells");
        }
      }
      break;
    }
    case ScenarioKind::loco: {
      require(split.complete_ids.size() >= 2, "TooFewCompleteRows",
              "LOCO needs at least two complete rows");
      if (test_ids.empty()) test_ids = split.complete_ids;
      if (!scenario.skip_test_id_validation) {
        for (const auto& id : test_ids) {
          require(complete.count(id) > 0, "TestRowIncomplete",
                  "LOCO test row '" + id + "' has missing cells");
        }
      }
      break;
    }
    case ScenarioKind::lomo: {
      if (test_ids.empty()) {
        test_ids = sample_ids(split.incomplete_ids, scenario.test_size, scenario.seed);
      }
      require(!test_ids.empty(), "EmptyTestSet", "LOMO needs at least one incomplete test row");
      if (!scenario.skip_test_id_validation) {
        for (const auto& id : test_ids) {
          require(complete.count(id) == 0, "TestRowComplete",
                  "LOMO test row '" + id + "' is fully observed");
        }
      }
      break;
    }
  }
  return test_ids;
}

RunReport run_scenario(const MultimodalDataset& dataset, const TargetMatrix& targets,
                       const ConfounderMatrix& confounders, const CvScenario& scenario) {
  dataset.validate();
  require(targets.n_rows() == dataset.n_rows() && confounders.n_rows() == dataset.n_rows(),
          "ShapeMismatch", "targets/confounders must align with the dataset rows");

  const std::vector<std::string> test_ids = resolve_test_ids(dataset, scenario);
  const std::vector<Eigen::Index> test_indices = indices_of(dataset, test_ids);
  const std::set<Eigen::Index> test_index_set(test_indices.begin(), test_indices.end());

  // Fold layout. LOMO holds every selected test row out of every fold's
  // training set; the other scenarios only exclude the fold's own rows.
  std::vector<Fold> folds;
  if (scenario.kind == ScenarioKind::train_test) {
    Fold fold;
    fold.test_rows = test_indices;
    for (Eigen::Index i = 0; i < dataset.n_rows(); ++i) {
      if (!test_index_set.count(i)) fold.train_rows.push_back(i);
    }
    folds.push_back(std::move(fold));
  } else {
    for (Eigen::Index t : test_indices) {
      Fold fold;
      fold.test_rows = {t};
      for (Eigen::Index i = 0; i < dataset.n_rows(); ++i) {
        if (scenario.kind == ScenarioKind::lomo) {
          if (!test_index_set.count(i)) fold.train_rows.push_back(i);
        } else if (i != t) {
          fold.train_rows.push_back(i);
        }
      }
      folds.push_back(std::move(fold));
    }
  }

  // Ids whose presence in any fit constitutes leakage, per fold.
  auto forbidden_for_fold = [&](const Fold& fold) {
    std::vector<std::string> ids;
    if (scenario.kind == ScenarioKind::lomo) {
      ids = test_ids;
    } else {
      for (Eigen::Index t : fold.test_rows) ids.push_back(dataset.row_ids[static_cast<std::size_t>(t)]);
    }
    return ids;
  };

  std::vector<FoldOutcome> outcomes(folds.size());
  parallel_for(folds.size(), [&](std::size_t f) {
    const Fold& fold = folds[f];
    FoldOutcome& outcome = outcomes[f];
    LeakageAudit local;
    const std::vector<std::string> forbidden = forbidden_for_fold(fold);
    const int fold_index = static_cast<int>(f);

    std::vector<Eigen::Index> imputer_rows = fold.train_rows;
    if (scenario.inject_test_into_imputer) {
      imputer_rows.insert(imputer_rows.end(), fold.test_rows.begin(), fold.test_rows.end());
    }
    const MultimodalDataset imputer_train = dataset.subset_rows(imputer_rows);
    const MultimodalDataset train = dataset.subset_rows(fold.train_rows);
    const MultimodalDataset test = dataset.subset_rows(fold.test_rows);

    const FittedImputer imputer = FittedImputer::fit(scenario.imputers, imputer_train);
    local.record(fold_index, "imputer-fit", imputer.training_row_ids(), forbidden);
    local.record(fold_index, "standardize-fit", imputer.training_row_ids(), forbidden);

    const CompletedDataset completed_train = imputer.impute(train);

    Eigen::MatrixXd y_train(fold.train_rows.size(), targets.n_targets());
    Eigen::MatrixXd z_train(fold.train_rows.size(), confounders.values.cols());
    for (std::size_t i = 0; i < fold.train_rows.size(); ++i) {
      y_train.row(static_cast<Eigen::Index>(i)) = targets.values.row(fold.train_rows[i]);
      z_train.row(static_cast<Eigen::Index>(i)) = confounders.values.row(fold.train_rows[i]);
    }
    Eigen::MatrixXd z_test(fold.test_rows.size(), confounders.values.cols());
    for (std::size_t i = 0; i < fold.test_rows.size(); ++i) {
      z_test.row(static_cast<Eigen::Index>(i)) = confounders.values.row(fold.test_rows[i]);
    }

    const std::vector<std::string>& train_ids = train.row_ids;
    Eigen::MatrixXd fit_x = completed_train.data.values;
    Eigen::MatrixXd fit_y = y_train;
    ResidualizationCoefs coefs;
    if (scenario.residualize) {
      coefs = fit_residualization(fit_x, fit_y, z_train);
      local.record(fold_index, "residualize-fit", train_ids, forbidden);
      fit_x = residualize(fit_x, z_train, coefs.gamma_hat);
      fit_y = residualize(fit_y, z_train, coefs.beta_hat);
    }

    const TrainedPredictor predictor = fit_model(scenario.model, fit_x, fit_y);
    local.record(fold_index, "predictor-fit", train_ids, forbidden);

    ImputeTrace trace;
    const CompletedDataset completed_test = imputer.impute(test, &trace);
    std::vector<std::string> neighbor_ids;
    for (const auto& [target_id, neighbors] : trace.knn_neighbors) {
      neighbor_ids.insert(neighbor_ids.end(), neighbors.begin(), neighbors.end());
    }
    if (!neighbor_ids.empty()) {
      local.record(fold_index, "knn-neighbors", neighbor_ids, forbidden);
    }

    Eigen::MatrixXd x_test = completed_test.data.values;
    if (scenario.residualize) x_test = residualize(x_test, z_test, coefs.gamma_hat);
    Eigen::MatrixXd pred = predictor.predict(x_test);
    if (scenario.residualize) pred = reconstruct(pred, z_test, coefs.beta_hat);

    outcome.predictions = pred;
    outcome.audit_entries = std::move(local.entries);
    // Violations are folded into the report audit afterwards, in fold order.
    for (auto& v : local.violations) outcome.audit_entries.push_back({fold_index, "violation", {v}});
  });

  RunReport report;
  report.scenario_predictions.resize(static_cast<Eigen::Index>(test_indices.size()),
                                     targets.n_targets());
  Eigen::MatrixXd y_true(test_indices.size(), targets.n_targets());
  Eigen::Index at = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t i = 0; i < folds[f].test_rows.size(); ++i, ++at) {
      report.scenario_predictions.row(at) = outcomes[f].predictions.row(static_cast<Eigen::Index>(i));
      y_true.row(at) = targets.values.row(folds[f].test_rows[i]);
    }
    for (auto& entry : outcomes[f].audit_entries) {
      if (entry.stage == "violation") {
        report.audit.violations.push_back(entry.consumed_ids.front());
      } else {
        report.audit.entries.push_back(std::move(entry));
      }
    }
  }

  if (!report.audit.violations.empty()) {
    throw LeakageError(report.audit.violations.front() + " (+" +
                       std::to_string(report.audit.violations.size() - 1) + " more)");
  }

  RunReport::Row row;
  row.model = scenario.model.label();
  row.imputer = scenario.imputers.label(dataset.schema);
  row.scenario = to_string(scenario.kind);
  row.modality_scope = "multimodal";
  row.folds = static_cast<int>(folds.size());
  row.r_per_target.resize(targets.n_targets());
  row.mae_per_target.resize(targets.n_targets());
  for (Eigen::Index t = 0; t < targets.n_targets(); ++t) {
    row.r_per_target(t) = pearson_r(y_true.col(t), report.scenario_predictions.col(t));
    row.mae_per_target(t) = mae(y_true.col(t), report.scenario_predictions.col(t));
  }
  row.r_mean = row.r_per_target.mean();
  row.r_std = sample_std(row.r_per_target);
  row.mae_mean = row.mae_per_target.mean();
  row.mae_std = sample_std(row.mae_per_target);
  report.rows.push_back(std::move(row));
  report.target_names = targets.target_names;
  report.seed = scenario.seed;
  report.resolved_test_ids = test_ids;
  return report;
}

RunReport compare_models(const MultimodalDataset& dataset, const TargetMatrix& targets,
                         const ConfounderMatrix& confounders,
                         const std::vector<CatalogEntry>& catalog, const CvScenario& base,
                         const CompareOptions& options) {
  require(!catalog.empty(), "EmptyCatalog", "compare needs at least one catalog entry");

  // Resolve the fold layout once so every pair shares it.
  const std::vector<std::string> shared_test_ids = resolve_test_ids(dataset, base);
  RunReport report;
  report.target_names = targets.target_names;
  report.seed = base.seed;
  report.resolved_test_ids = shared_test_ids;

  for (const auto& entry : catalog) {
    CvScenario scen = base;
    scen.test_ids = shared_test_ids;
    scen.imputers = ImputerPlan::resolve(entry.imputers_doc, dataset.schema);
    scen.model = ModelSpec::from_json(entry.model_doc);
    RunReport one = run_scenario(dataset, targets, confounders, scen);
    for (auto& row : one.rows) report.rows.push_back(std::move(row));
    for (auto& e : one.audit.entries) report.audit.entries.push_back(std::move(e));

    if (options.unimodal) {
      RunReport::Row best;
      bool have_best = false;
      for (int mi = 0; mi < dataset.schema.n_modalities(); ++mi) {
        const MultimodalDataset sub = dataset.subset_modalities({mi});
        CvScenario scen_m = scen;
        scen_m.imputers = ImputerPlan::resolve(entry.imputers_doc, sub.schema);
        // Test rows were chosen against the full dataset; skip the per-kind
        // completeness contract which no longer applies to the slice.
        scen_m.skip_test_id_validation = true;
        RunReport one_m = run_scenario(sub, targets, confounders, scen_m);
        RunReport::Row row = one_m.rows.front();
        row.modality_scope =
            "unimodal:" + dataset.schema.modalities[static_cast<std::size_t>(mi)].name;
        if (!have_best || row.r_mean > best.r_mean) {
          best = row;
          have_best = true;
        }
      }
      if (have_best) report.rows.push_back(std::move(best));
    }
  }

  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [&](const RunReport::Row& a, const RunReport::Row& b) {
                     return options.sort_by_mae ? a.mae_mean < b.mae_mean : a.r_mean > b.r_mean;
                   });
  report.config_hash = options.config_hash;
  return report;
}

void write_report_csv(const RunReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) contract_fail("FileNotWritable", "cannot write " + path);
  char buf[32];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  out << "model,imputer,scenario,modality";
  for (const auto& t : report.target_names) out << ",r_" << csv::escape_field(t);
  out << ",r_mean,r_std";
  for (const auto& t : report.target_names) out << ",mae_" << csv::escape_field(t);
  out << ",mae_mean,mae_std,folds,seed,config_hash\n";
  for (const auto& row : report.rows) {
    out << csv::escape_field(row.model) << ',' << csv::escape_field(row.imputer) << ','
        << row.scenario << ',' << csv::escape_field(row.modality_scope);
    for (Eigen::Index t = 0; t < row.r_per_target.size(); ++t) out << ',' << fmt(row.r_per_target(t));
    out << ',' << fmt(row.r_mean) << ',' << fmt(row.r_std);
    for (Eigen::Index t = 0; t < row.mae_per_target.size(); ++t) {
      out << ',' << fmt(row.mae_per_target(t));
    }
    out << ',' << fmt(row.mae_mean) << ',' << fmt(row.mae_std) << ',' << row.folds << ','
        << report.seed << ',' << report.config_hash << '\n';
  }
}

// ---- pipeline bundle -----------------------------------------------------------------

PipelineModel train_pipeline(const MultimodalDataset& dataset, const TargetMatrix& targets,
                             const ConfounderMatrix& confounders, const ImputerPlan& plan,
                             const ModelSpec& spec, bool residualize) {
  PipelineModel model;
  model.plan = plan;
  model.spec = spec;
  model.residualize = residualize;
  const FittedImputer imputer = FittedImputer::fit(plan, dataset);
  const CompletedDataset completed = imputer.impute(dataset);
  Eigen::MatrixXd x = completed.data.values;
  Eigen::MatrixXd y = targets.values;
  if (residualize) {
    model.coefs = fit_residualization(x, y, confounders.values);
    x = residualize(x, confounders.values, model.coefs.gamma_hat);
    y = residualize(y, confounders.values, model.coefs.beta_hat);
  }
  model.predictor = fit_model(spec, x, y);
  return model;
}

PredictFn pipeline_predict_fn(const PipelineModel& model, const Eigen::MatrixXd& confounders) {
  if (!model.residualize) {
    return [&model](const Eigen::MatrixXd& x) { return model.predictor.predict(x); };
  }
  const Eigen::MatrixXd z = confounders;
  return [&model, z](const Eigen::MatrixXd& x) {
    // Single-subject explainers batch many variants of one row; replicate the
    // subject's confounders to match.
    Eigen::MatrixXd zz = z;
    if (z.rows() == 1 && x.rows() != 1) zz = z.row(0).replicate(x.rows(), 1);
    const Eigen::MatrixXd eps = residualize(x, zz, model.coefs.gamma_hat);
    return reconstruct(model.predictor.predict(eps), zz, model.coefs.beta_hat);
  };
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

json PipelineModel::to_json(const DatasetSchema& schema) const {
  json doc;
  doc["format_version"] = 1;
  doc["imputers"] = plan.to_json(schema);
  doc["residualize"] = residualize;
  if (residualize) {
    doc["gamma_hat"] = matrix_to_json(coefs.gamma_hat);
    doc["beta_hat"] = matrix_to_json(coefs.beta_hat);
  }
  doc["model_spec"] = spec.to_json();
  doc["model"] = predictor.attentive ? predictor.attentive->to_json()
                                     : predictor.linear_like->to_json();
  return doc;
}

PipelineModel PipelineModel::from_json(const json& doc, const DatasetSchema& schema) {
  require(doc.at("format_version").get<int>() == 1, "UnsupportedVersion",
          "pipeline document version mismatch");
  PipelineModel model;
  model.plan = ImputerPlan::resolve(doc.at("imputers"), schema);
  model.residualize = doc.at("residualize").get<bool>();
  if (model.residualize) {
    model.coefs.gamma_hat = matrix_from_json(doc.at("gamma_hat"));
    model.coefs.beta_hat = matrix_from_json(doc.at("beta_hat"));
  }
  model.spec = ModelSpec::from_json(doc.at("model_spec"));
  if (model.spec.kind == ModelSpec::Kind::attentive) {
    model.predictor.attentive = AttentiveModel::from_json(doc.at("model"));
  } else {
    model.predictor.linear_like = PredictorModel::from_json(doc.at("model"));
  }
  return model;
}

// ---- run configuration ------------------------------------------------------------------

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) contract_fail("FileNotFound", "cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    contract_fail("MalformedConfig", std::string(e.what()));
  }
  RunConfig config;
  config.features_path = doc.at("features").get<std::string>();
  config.schema_path = doc.at("schema").get<std::string>();
  config.targets_path = doc.at("targets").get<std::string>();
  config.confounders_path = doc.at("confounders").get<std::string>();
  if (doc.contains("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();
  if (doc.contains("imputers")) config.imputers_doc = doc["imputers"];
  if (doc.contains("predictor")) config.predictor_doc = doc["predictor"];
  if (doc.contains("catalog")) {
    for (const auto& entry : doc["catalog"]) {
      config.catalog.push_back({entry.at("imputers"), entry.at("predictor")});
    }
  }
  if (doc.contains("scenario")) {
    config.scenario = scenario_kind_from_string(doc["scenario"].get<std::string>());
  }
  if (doc.contains("test_size")) config.test_size = doc["test_size"].get<int>();
  if (doc.contains("test_ids")) {
    config.test_ids = doc["test_ids"].get<std::vector<std::string>>();
  }
  if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("bins")) config.bins = doc["bins"].get<int>();
  if (doc.contains("eps")) config.eps = doc["eps"].get<double>();
  if (doc.contains("residualize")) config.residualize = doc["residualize"].get<bool>();
  if (doc.contains("unimodal")) config.unimodal = doc["unimodal"].get<bool>();
  if (doc.contains("sort_by_mae")) config.sort_by_mae = doc["sort_by_mae"].get<bool>();
  if (doc.contains("importance_repeats")) {
    config.importance_repeats = doc["importance_repeats"].get<int>();
  }
  if (doc.contains("verbose_importance")) {
    config.verbose_importance = doc["verbose_importance"].get<bool>();
  }
  config.raw = doc;
  return config;
}

std::string RunConfig::hash() const {
  const std::string canon = raw.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace m2m

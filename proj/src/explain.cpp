#include "m2m/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "m2m/csv.hpp"
#include "m2m/divergence.hpp"
#include "m2m/errors.hpp"
#include "m2m/parallel.hpp"
#include "m2m/rng.hpp"

namespace m2m {

std::string to_string(ImportanceMethod method) {
  switch (method) {
    case ImportanceMethod::permutation: return "permutation";
    case ImportanceMethod::shapley: return "shapley";
    default: return "mask";
  }
}

namespace {

Eigen::VectorXd per_target_r(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat) {
  Eigen::VectorXd r(y.cols());
  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    try {
      r(t) = pearson_r(y.col(t), yhat.col(t));
    } catch (const ContractError& e) {
      if (std::string(e.code()) == "ConstantInput") {
        contract_fail("ConstantPrediction",
                      "Pearson r undefined for target column " + std::to_string(t));
      }
      throw;
    }
  }
  return r;
}

}  // namespace

ImportanceReport permutation_importance(const PredictFn& model, const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y,
                                        const std::vector<std::string>& feature_names,
                                        const std::vector<std::string>& target_names,
                                        int k_repeats, std::uint64_t seed,
                                        const PermutationSource& source) {
  require(x.rows() == y.rows(), "ShapeMismatch", "X and Y row counts differ");
  require(k_repeats >= 1, "InvalidHyperparameter", "K must be at least 1");
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  const Eigen::Index t = y.cols();

  ImportanceReport report;
  report.method = ImportanceMethod::permutation;
  report.feature_names = feature_names;
  report.target_names = target_names;
  report.repeats = k_repeats;
  report.seed = seed;

  const Eigen::MatrixXd baseline_pred = model(x);
  report.baseline_r = per_target_r(y, baseline_pred);
  const double baseline_r_mean = report.baseline_r.mean();

  report.per_target = Eigen::MatrixXd::Zero(f, t);
  report.mean_score = Eigen::VectorXd::Zero(f);
  report.mean_r_first = Eigen::VectorXd::Zero(f);

  parallel_for(static_cast<std::size_t>(f), [&](std::size_t j) {
    Eigen::VectorXd accum = Eigen::VectorXd::Zero(t);
    double accum_r_first = 0.0;
    for (int k = 0; k < k_repeats; ++k) {
      std::vector<std::size_t> perm;
      if (source) {
        perm = source(static_cast<std::size_t>(n), j, k);
      } else {
        Rng rng(derive_seed(seed, j * 0x10001ULL + static_cast<std::uint64_t>(k)));
        perm = rng.permutation(static_cast<std::size_t>(n));
      }
      Eigen::MatrixXd shuffled = x;
      for (Eigen::Index i = 0; i < n; ++i) {
        shuffled(i, static_cast<Eigen::Index>(j)) =
            x(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]),
              static_cast<Eigen::Index>(j));
      }
      const Eigen::VectorXd r = per_target_r(y, model(shuffled));
      accum += report.baseline_r - r;
      accum_r_first += baseline_r_mean - r.mean();
    }
    report.per_target.row(static_cast<Eigen::Index>(j)) = accum.transpose() / k_repeats;
    report.mean_score(static_cast<Eigen::Index>(j)) =
        report.per_target.row(static_cast<Eigen::Index>(j)).mean();
    report.mean_r_first(static_cast<Eigen::Index>(j)) = accum_r_first / k_repeats;
  });
  return report;
}

ShapleyReport shapley_exact(const PredictFn& model, const Eigen::RowVectorXd& row,
                            const Eigen::RowVectorXd& background,
                            const std::vector<int>& feature_subset) {
  require(row.size() == background.size(), "ShapeMismatch",
          "row and background widths differ");
  const int q = static_cast<int>(feature_subset.size());
  require(q >= 1, "TooManyFeatures", "need at least one feature to explain");
  require(q <= 15, "TooManyFeatures",
          "exact enumeration is capped at 15 features, got " + std::to_string(q));
  for (int j : feature_subset) {
    require(j >= 0 && j < row.size(), "ShapeMismatch",
            "feature index " + std::to_string(j) + " out of range");
  }

  // One prediction per coalition, all evaluated in a single batch.
  const std::uint32_t n_subsets = 1u << q;
  Eigen::MatrixXd coalition_rows(n_subsets, row.size());
  for (std::uint32_t s = 0; s < n_subsets; ++s) {
    // Features outside the explained subset keep their observed values.
    Eigen::RowVectorXd base = row;
    for (int b = 0; b < q; ++b) {
      if (!(s & (1u << b))) {
        base(feature_subset[static_cast<std::size_t>(b)]) =
            background(feature_subset[static_cast<std::size_t>(b)]);
      }
    }
    coalition_rows.row(s) = base;
  }
  const Eigen::MatrixXd values = model(coalition_rows);  // 2^q x T
  const Eigen::Index t = values.cols();

  // w(s) = s! (q-s-1)! / q!
  std::vector<double> weight(static_cast<std::size_t>(q));
  {
    std::vector<double> factorial(static_cast<std::size_t>(q) + 1, 1.0);
    for (int i = 1; i <= q; ++i) {
      factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i - 1)] * i;
    }
    for (int s = 0; s < q; ++s) {
      weight[static_cast<std::size_t>(s)] = factorial[static_cast<std::size_t>(s)] *
                                            factorial[static_cast<std::size_t>(q - s - 1)] /
                                            factorial[static_cast<std::size_t>(q)];
    }
  }

  ShapleyReport report;
  report.feature_indices = feature_subset;
  report.phi = Eigen::MatrixXd::Zero(q, t);
  report.baseline_value = values.row(0);
  report.full_value = values.row(n_subsets - 1);
  for (std::uint32_t s = 0; s < n_subsets; ++s) {
    const int cardinality = __builtin_popcount(s);
    for (int b = 0; b < q; ++b) {
      if (s & (1u << b)) continue;
      const double w = weight[static_cast<std::size_t>(cardinality)];
      report.phi.row(b) += w * (values.row(s | (1u << b)) - values.row(s));
    }
  }
  return report;
}

RegionTable region_importance_table(const ImportanceReport& report,
                                    const std::string& atlas_csv_path) {
  const csv::Table atlas = csv::read_file(atlas_csv_path);
  require(atlas.header.size() == 3 && atlas.header[0] == "feature" &&
              atlas.header[1] == "region" && atlas.header[2] == "network",
          "MalformedAtlasRow", "atlas map must have header 'feature,region,network'");
  std::map<std::string, std::pair<std::string, std::string>> mapping;
  for (const auto& row : atlas.rows) {
    require(row.size() == 3, "MalformedAtlasRow", "atlas row with wrong field count");
    require(mapping.emplace(row[0], std::make_pair(row[1], row[2])).second, "MalformedAtlasRow",
            "feature '" + row[0] + "' mapped twice");
  }

  RegionTable table;
  for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
    RegionTable::Row row;
    row.feature = report.feature_names[j];
    row.score = report.mean_score(static_cast<Eigen::Index>(j));
    auto it = mapping.find(row.feature);
    if (it == mapping.end()) {
      table.overflow.push_back(std::move(row));
      continue;
    }
    row.region = it->second.first;
    row.network = it->second.second;
    table.rows.push_back(std::move(row));
  }
  auto by_score = [](const RegionTable::Row& a, const RegionTable::Row& b) {
    return a.score > b.score;
  };
  std::stable_sort(table.rows.begin(), table.rows.end(), by_score);
  std::stable_sort(table.overflow.begin(), table.overflow.end(), by_score);
  return table;
}

void write_importance_csv(const ImportanceReport& report, const std::string& path, bool verbose) {
  std::ofstream out(path, std::ios::binary);
  if (!out) contract_fail("FileNotWritable", "cannot write " + path);
  out << "feature,target,score,method,K,seed\n";
  const std::string method = to_string(report.method);
  auto emit = [&](const std::string& feature, const std::string& target, double score) {
    out << csv::escape_field(feature) << ',' << csv::escape_field(target) << ','
        << csv::format_double(score) << ',' << method << ',' << report.repeats << ','
        << report.seed << '\n';
  };
  for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
    const Eigen::Index jj = static_cast<Eigen::Index>(j);
    for (std::size_t t = 0; t < report.target_names.size(); ++t) {
      emit(report.feature_names[j], report.target_names[t],
           report.per_target(jj, static_cast<Eigen::Index>(t)));
    }
    emit(report.feature_names[j], "mean", report.mean_score(jj));
    if (verbose) emit(report.feature_names[j], "mean_r_first", report.mean_r_first(jj));
  }
}

void write_region_csv(const RegionTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) contract_fail("FileNotWritable", "cannot write " + path);
  out << "rank,feature,region,network,score\n";
  int rank = 1;
  for (const auto& row : table.rows) {
    out << rank++ << ',' << csv::escape_field(row.feature) << ',' << csv::escape_field(row.region)
        << ',' << csv::escape_field(row.network) << ',' << csv::format_double(row.score) << '\n';
  }
  for (const auto& row : table.overflow) {
    out << rank++ << ',' << csv::escape_field(row.feature) << ",(unmapped),,"
        << csv::format_double(row.score) << '\n';
  }
}

}  // namespace m2m

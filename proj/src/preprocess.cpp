#include "m2m/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "m2m/csv.hpp"
#include "m2m/errors.hpp"

namespace m2m {

Standardizer Standardizer::fit(const Eigen::MatrixXd& values, const BoolMask* mask) {
  Standardizer s;
  s.cols_.resize(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      if (mask && !(*mask)(i, j)) continue;
      sum += values(i, j);
      ++n;
    }
    auto& c = s.cols_[static_cast<std::size_t>(j)];
    if (n == 0) {
      c.constant = true;
      continue;
    }
    c.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      if (mask && !(*mask)(i, j)) continue;
      const double d = values(i, j) - c.mean;
      ss += d * d;
    }
    if (n < 2 || ss == 0.0) {
      c.constant = true;
      c.sd = 1.0;
    } else {
      c.sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
  }
  return s;
}

Standardizer Standardizer::from_columns(std::vector<ColumnStats> cols) {
  Standardizer s;
  s.cols_ = std::move(cols);
  return s;
}

double Standardizer::transform_cell(Eigen::Index col, double v) const {
  const auto& c = cols_[static_cast<std::size_t>(col)];
  return c.constant ? v : (v - c.mean) / c.sd;
}

double Standardizer::inverse_cell(Eigen::Index col, double v) const {
  const auto& c = cols_[static_cast<std::size_t>(col)];
  return c.constant ? v : v * c.sd + c.mean;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& values) const {
  require(values.cols() == width(), "ShapeMismatch", "standardizer fitted on different width");
  Eigen::MatrixXd out = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const auto& c = cols_[static_cast<std::size_t>(j)];
    if (c.constant) continue;
    out.col(j) = (values.col(j).array() - c.mean) / c.sd;
  }
  return out;
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& values) const {
  require(values.cols() == width(), "ShapeMismatch", "standardizer fitted on different width");
  Eigen::MatrixXd out = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const auto& c = cols_[static_cast<std::size_t>(j)];
    if (c.constant) continue;
    out.col(j) = values.col(j).array() * c.sd + c.mean;
  }
  return out;
}

Eigen::MatrixXd merge_probes_max(const Eigen::MatrixXd& expression,
                                 const std::vector<std::string>& probe_names,
                                 const std::map<std::string, std::string>& probe_to_gene,
                                 std::vector<std::string>* gene_names_out) {
  require(static_cast<Eigen::Index>(probe_names.size()) == expression.cols(), "ShapeMismatch",
          "probe name count must match expression columns");
  // Gene order: first appearance across probes.
  std::vector<std::string> genes;
  std::map<std::string, int> gene_index;
  std::vector<int> probe_gene(probe_names.size());
  for (std::size_t p = 0; p < probe_names.size(); ++p) {
    auto it = probe_to_gene.find(probe_names[p]);
    if (it == probe_to_gene.end()) {
      contract_fail("UnmappedProbe", "probe '" + probe_names[p] + "' has no gene mapping");
    }
    auto [gi, inserted] = gene_index.try_emplace(it->second, static_cast<int>(genes.size()));
    if (inserted) genes.push_back(it->second);
    probe_gene[p] = gi->second;
  }

  Eigen::MatrixXd out(expression.rows(), static_cast<Eigen::Index>(genes.size()));
  out.setConstant(-std::numeric_limits<double>::infinity());
  for (Eigen::Index p = 0; p < expression.cols(); ++p) {
    const int g = probe_gene[static_cast<std::size_t>(p)];
    out.col(g) = out.col(g).cwiseMax(expression.col(p));
  }
  if (gene_names_out) *gene_names_out = genes;
  return out;
}

std::map<std::string, std::string> load_probe_map(const std::string& csv_path) {
  const csv::Table table = csv::read_file(csv_path);
  require(table.header.size() == 2 && table.header[0] == "probe" && table.header[1] == "gene",
          "MalformedProbeMap", "probe map must have header 'probe,gene'");
  std::map<std::string, std::string> map;
  for (const auto& row : table.rows) {
    require(map.emplace(row[0], row[1]).second, "DuplicateProbe",
            "probe '" + row[0] + "' mapped twice");
  }
  return map;
}

namespace {

double gaussian_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

}  // namespace

Gmm2Fit fit_gmm2(const std::vector<double>& values, int max_iter, double tol) {
  std::set<double> distinct(values.begin(), values.end());
  require(distinct.size() >= 4, "DegenerateComponent",
          "fit_gmm2 needs at least 4 distinct values, got " + std::to_string(distinct.size()));
  const std::size_t n = values.size();

  // Deterministic init: 2-means seeded at the extremes, run to a fixed point,
  // then component stats from the two clusters.
  double c1 = *distinct.begin();
  double c2 = *distinct.rbegin();
  std::vector<bool> in_second(n);
  for (int round = 0; round < 100; ++round) {
    double s1 = 0.0, s2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool second = std::abs(values[i] - c2) < std::abs(values[i] - c1);
      changed = changed || (second != in_second[i]);
      in_second[i] = second;
      (second ? s2 : s1) += values[i];
      (second ? n2 : n1) += 1;
    }
    if (n1 == 0 || n2 == 0) break;
    c1 = s1 / static_cast<double>(n1);
    c2 = s2 / static_cast<double>(n2);
    if (!changed && round > 0) break;
  }

  Gmm2Fit fit;
  {
    double s1 = 0.0, s2 = 0.0, ss1 = 0.0, ss2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      (in_second[i] ? s2 : s1) += values[i];
      (in_second[i] ? n2 : n1) += 1;
    }
    if (n1 == 0 || n2 == 0) {  // clusters collapsed; fall back to a median split
      std::vector<double> sorted(values);
      std::sort(sorted.begin(), sorted.end());
      const std::size_t half = n / 2;
      for (std::size_t i = 0; i < n; ++i) in_second[i] = values[i] >= sorted[half];
      s1 = s2 = 0.0;
      n1 = n2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        (in_second[i] ? s2 : s1) += values[i];
        (in_second[i] ? n2 : n1) += 1;
      }
    }
    fit.mean1 = s1 / static_cast<double>(n1);
    fit.mean2 = s2 / static_cast<double>(n2);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = values[i] - (in_second[i] ? fit.mean2 : fit.mean1);
      (in_second[i] ? ss2 : ss1) += d * d;
    }
    fit.sd1 = std::max(std::sqrt(ss1 / static_cast<double>(n1)), 1e-3);
    fit.sd2 = std::max(std::sqrt(ss2 / static_cast<double>(n2)), 1e-3);
    fit.weight1 = static_cast<double>(n1) / static_cast<double>(n);
    fit.weight2 = static_cast<double>(n2) / static_cast<double>(n);
  }

  // EM with responsibilities in log space.
  std::vector<double> resp(n);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double l1 = std::log(fit.weight1) + gaussian_log_pdf(values[i], fit.mean1, fit.sd1);
      const double l2 = std::log(fit.weight2) + gaussian_log_pdf(values[i], fit.mean2, fit.sd2);
      const double m = std::max(l1, l2);
      const double lse = m + std::log(std::exp(l1 - m) + std::exp(l2 - m));
      resp[i] = std::exp(l2 - lse);  // responsibility of component 2
      ll += lse;
    }
    fit.loglik_history.push_back(ll);
    fit.iterations = iter + 1;
    if (std::abs(ll - prev_ll) < tol) {
      fit.converged = true;
      break;
    }
    prev_ll = ll;

    double r2 = 0.0;
    for (double r : resp) r2 += r;
    const double r1 = static_cast<double>(n) - r2;
    if (r1 < 1e-12 || r2 < 1e-12) {
      contract_fail("DegenerateComponent", "a mixture component lost all mass");
    }
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m1 += (1.0 - resp[i]) * values[i];
      m2 += resp[i] * values[i];
    }
    m1 /= r1;
    m2 /= r2;
    double v1 = 0.0, v2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v1 += (1.0 - resp[i]) * (values[i] - m1) * (values[i] - m1);
      v2 += resp[i] * (values[i] - m2) * (values[i] - m2);
    }
    fit.mean1 = m1;
    fit.mean2 = m2;
    fit.sd1 = std::sqrt(v1 / r1);
    fit.sd2 = std::sqrt(v2 / r2);
    if (fit.sd1 < 1e-8 || fit.sd2 < 1e-8) {
      contract_fail("DegenerateComponent", "component standard deviation collapsed");
    }
    fit.weight1 = r1 / static_cast<double>(n);
    fit.weight2 = r2 / static_cast<double>(n);
  }

  if (fit.mean1 > fit.mean2) {
    std::swap(fit.mean1, fit.mean2);
    std::swap(fit.sd1, fit.sd2);
    std::swap(fit.weight1, fit.weight2);
  }
  return fit;
}

double expression_threshold(const Gmm2Fit& fit) {
  return 0.5 * (fit.mean1 + fit.mean2);
}

RankedFeatures log2_fold_change(const Eigen::MatrixXd& genes,
                                const std::vector<std::string>& gene_names,
                                const std::vector<Group>& labels, Group group_a, Group group_b) {
  require(static_cast<Eigen::Index>(labels.size()) == genes.rows(), "ShapeMismatch",
          "one label per sample required");
  require(static_cast<Eigen::Index>(gene_names.size()) == genes.cols(), "ShapeMismatch",
          "one name per gene column required");
  std::vector<Eigen::Index> rows_a, rows_b;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == group_a) rows_a.push_back(static_cast<Eigen::Index>(i));
    if (labels[i] == group_b) rows_b.push_back(static_cast<Eigen::Index>(i));
  }
  require(!rows_a.empty() && !rows_b.empty(), "EmptyGroup", "both groups must be non-empty");

  RankedFeatures ranked;
  ranked.group_a = to_string(group_a);
  ranked.group_b = to_string(group_b);
  ranked.entries.reserve(static_cast<std::size_t>(genes.cols()));
  for (Eigen::Index j = 0; j < genes.cols(); ++j) {
    double ma = 0.0, mb = 0.0;
    for (Eigen::Index i : rows_a) ma += genes(i, j);
    for (Eigen::Index i : rows_b) mb += genes(i, j);
    ma /= static_cast<double>(rows_a.size());
    mb /= static_cast<double>(rows_b.size());
    ranked.entries.push_back({gene_names[static_cast<std::size_t>(j)], ma - mb});
  }
  std::stable_sort(ranked.entries.begin(), ranked.entries.end(),
                   [](const RankedFeature& a, const RankedFeature& b) {
                     return std::abs(a.log2fc) > std::abs(b.log2fc);
                   });
  return ranked;
}

}  // namespace m2m

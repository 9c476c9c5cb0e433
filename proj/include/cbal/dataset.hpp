#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbal/common.hpp"
#include "cbal/csv.hpp"

namespace cbal {

// Column mapping for CSV ingestion. `cluster` is optional; clustered mode
// is all-or-nothing. Several outcome columns may be mapped; estimators pick
// one by name.
struct Schema {
  std::string group;
  std::optional<std::string> cluster;
  std::vector<std::string> outcomes;
  std::vector<std::string> covariates;
};

// Unit rows in column-major arrays: group flag (0 comparison / 1 focal),
// optional cluster id interned to 0..J-1 in first-appearance order, one or
// more outcome vectors, and an n x d covariate matrix. Immutable once built.
class AnalysisDataset {
 public:
  std::vector<int> group;                 // 0 or 1 per row
  std::vector<int> cluster;               // empty in unclustered mode
  std::vector<std::string> cluster_labels;  // original label per interned id
  std::vector<std::string> outcome_names;
  std::vector<Eigen::VectorXd> outcomes;  // one vector per outcome name
  Eigen::MatrixXd covariates;             // n x d
  std::vector<std::string> covariate_names;

  std::size_t n_rows() const { return group.size(); }
  bool clustered() const { return !cluster.empty(); }
  int n_clusters() const { return static_cast<int>(cluster_labels.size()); }

  std::size_t n_focal() const {
    std::size_t c = 0;
    for (int g : group) c += (g == 1);
    return c;
  }
  std::size_t n_comparison() const { return n_rows() - n_focal(); }

  const Eigen::VectorXd& outcome(const std::string& name) const {
    for (std::size_t k = 0; k < outcome_names.size(); ++k)
      if (outcome_names[k] == name) return outcomes[k];
    fail(ErrorKind::Validation, "unknown outcome column: " + name);
  }

  int covariate_index(const std::string& name) const {
    for (std::size_t j = 0; j < covariate_names.size(); ++j)
      if (covariate_names[j] == name) return static_cast<int>(j);
    return -1;
  }

  std::vector<std::size_t> rows_of_group(int g) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < group.size(); ++i)
      if (group[i] == g) idx.push_back(i);
    return idx;
  }

  AnalysisDataset subset(const std::vector<std::size_t>& rows) const {
    AnalysisDataset out;
    out.cluster_labels = cluster_labels;
    out.outcome_names = outcome_names;
    out.covariate_names = covariate_names;
    out.covariates.resize(static_cast<Eigen::Index>(rows.size()), covariates.cols());
    out.outcomes.resize(outcomes.size());
    for (auto& v : out.outcomes) v.resize(static_cast<Eigen::Index>(rows.size()));
    out.group.reserve(rows.size());
    if (clustered()) out.cluster.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::size_t i = rows[k];
      out.group.push_back(group[i]);
      if (clustered()) out.cluster.push_back(cluster[i]);
      out.covariates.row(static_cast<Eigen::Index>(k)) = covariates.row(static_cast<Eigen::Index>(i));
      for (std::size_t t = 0; t < outcomes.size(); ++t)
        out.outcomes[t](static_cast<Eigen::Index>(k)) = outcomes[t](static_cast<Eigen::Index>(i));
    }
    return out;
  }
};

inline AnalysisDataset load_dataset(const std::string& path, const Schema& schema) {
  csv::Table t = csv::read_file(path);

  auto need = [&](const std::string& name) {
    int j = t.column(name);
    require(j >= 0, ErrorKind::Schema, "missing column '" + name + "' in " + path);
    return j;
  };

  int gcol = need(schema.group);
  int hcol = -1;
  if (schema.cluster) hcol = need(*schema.cluster);
  std::vector<int> ycols, xcols;
  for (const auto& name : schema.outcomes) ycols.push_back(need(name));
  require(!schema.covariates.empty(), ErrorKind::Schema, "schema maps no covariate columns");
  for (const auto& name : schema.covariates) xcols.push_back(need(name));

  AnalysisDataset ds;
  ds.outcome_names = schema.outcomes;
  ds.covariate_names = schema.covariates;
  const std::size_t n = t.rows.size();
  require(n > 0, ErrorKind::Validation, "dataset has no data rows: " + path);
  ds.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(xcols.size()));
  ds.outcomes.assign(ycols.size(), Eigen::VectorXd(static_cast<Eigen::Index>(n)));
  ds.group.reserve(n);

  std::map<std::string, int> intern;  // cluster label -> id (first appearance order)
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = t.rows[i];
    const std::string where = "row " + std::to_string(i + 1);

    double g = csv::parse_double(row[static_cast<std::size_t>(gcol)], where + ", column '" + schema.group + "'");
    require(g == 0.0 || g == 1.0, ErrorKind::Validation,
            "non-binary group value '" + row[static_cast<std::size_t>(gcol)] + "' in " + where);
    ds.group.push_back(static_cast<int>(g));

    if (hcol >= 0) {
      const std::string& label = row[static_cast<std::size_t>(hcol)];
      require(!label.empty(), ErrorKind::Validation, "missing cluster id in " + where);
      auto it = intern.find(label);
      if (it == intern.end()) {
        int id = static_cast<int>(ds.cluster_labels.size());
        intern.emplace(label, id);
        ds.cluster_labels.push_back(label);
        ds.cluster.push_back(id);
      } else {
        ds.cluster.push_back(it->second);
      }
    }
    for (std::size_t k = 0; k < ycols.size(); ++k)
      ds.outcomes[k](static_cast<Eigen::Index>(i)) =
          csv::parse_double(row[static_cast<std::size_t>(ycols[k])], where + ", column '" + schema.outcomes[k] + "'");
    for (std::size_t k = 0; k < xcols.size(); ++k)
      ds.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          csv::parse_double(row[static_cast<std::size_t>(xcols[k])], where + ", column '" + schema.covariates[k] + "'");
  }
  return ds;
}

// Writes the dataset back out with shortest-roundtrip formatting so that a
// save/load cycle reproduces every numeric field bitwise.
inline void save_dataset(const AnalysisDataset& ds, const std::string& path,
                         const Schema& schema) {
  csv::Writer w(path);
  std::vector<std::string> header{schema.group};
  if (schema.cluster) header.push_back(*schema.cluster);
  for (const auto& s : schema.outcomes) header.push_back(s);
  for (const auto& s : schema.covariates) header.push_back(s);
  w.row(header);
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    std::vector<std::string> row;
    row.push_back(std::to_string(ds.group[i]));
    if (schema.cluster) row.push_back(ds.cluster_labels[static_cast<std::size_t>(ds.cluster[i])]);
    for (const auto& y : ds.outcomes) row.push_back(format_double(y(static_cast<Eigen::Index>(i))));
    for (Eigen::Index j = 0; j < ds.covariates.cols(); ++j)
      row.push_back(format_double(ds.covariates(static_cast<Eigen::Index>(i), j)));
    w.row(row);
  }
}

struct TopCodeResult {
  AnalysisDataset dataset;
  double fraction_affected = 0.0;
};

// Replaces Y by min(Y, cap) for one outcome column.
inline TopCodeResult top_code_outcome(const AnalysisDataset& ds, const std::string& outcome_name,
                                      double cap) {
  require(std::isfinite(cap), ErrorKind::Contract, "top-code cap must be finite");
  TopCodeResult out{ds, 0.0};
  for (std::size_t k = 0; k < ds.outcome_names.size(); ++k) {
    if (ds.outcome_names[k] != outcome_name) continue;
    std::size_t affected = 0;
    auto& y = out.dataset.outcomes[k];
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) > cap) {
        y(i) = cap;
        ++affected;
      }
    }
    out.fraction_affected = static_cast<double>(affected) / static_cast<double>(y.size());
    return out;
  }
  fail(ErrorKind::Validation, "unknown outcome column: " + outcome_name);
}

}  // namespace cbal

#include "cogmtl/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cogmtl/errors.hpp"
#include "cogmtl/csv.hpp"

namespace cogmtl {

IndexSet Horizon::observed() const {
  IndexSet rows;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i].has_value()) rows.push_back(static_cast<Index>(i));
  return rows;
}

const Horizon& Cohort::horizon(std::string_view label) const {
  for (const auto& h : targets)
    if (h.label == label) return h;
  throw ConfigError("unknown horizon '" + std::string(label) + "'");
}

namespace {

int canonical_rank(const std::string& g) {
  if (g == "NC") return 0;
  if (g == "MCI") return 1;
  if (g == "AD") return 2;
  return 3;
}

std::vector<std::string> sorted_levels(const std::vector<std::string>& labels) {
  std::set<std::string> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

}  // namespace

std::vector<std::string> Cohort::group_levels() const {
  auto levels = sorted_levels(group);
  std::stable_sort(levels.begin(), levels.end(),
                   [](const auto& a, const auto& b) { return canonical_rank(a) < canonical_rank(b); });
  return levels;
}

std::vector<std::string> Cohort::batch_levels() const { return sorted_levels(batch); }

void validate(const Cohort& c) {
  const auto n = static_cast<std::size_t>(c.features.rows());
  if (n < 1) throw DataError("cohort has no subjects");
  if (c.features.cols() < 1) throw DataError("cohort has no features");
  if (c.subject_ids.size() != n || c.group.size() != n || c.batch.size() != n || c.age.size() != n)
    throw DataError("cohort label vectors do not match the feature row count");
  if (c.feature_names.size() != static_cast<std::size_t>(c.features.cols()))
    throw DataError("feature_names does not match the feature column count");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (c.subject_ids[i].empty()) throw DataError("empty subject_id at row " + std::to_string(i + 1));
    if (!seen.insert(c.subject_ids[i]).second) throw DataError("duplicate subject_id '" + c.subject_ids[i] + "'");
    if (c.group[i].empty()) throw DataError("subject '" + c.subject_ids[i] + "' has no group label");
    if (c.batch[i].empty()) throw DataError("subject '" + c.subject_ids[i] + "' has no batch label");
    if (!std::isfinite(c.age[i])) throw DataError("subject '" + c.subject_ids[i] + "' has non-finite age");
  }
  for (Index j = 0; j < c.features.cols(); ++j)
    for (Index i = 0; i < c.features.rows(); ++i)
      if (!std::isfinite(c.features(i, j)))
        throw DataError("non-finite feature value at subject '" + c.subject_ids[static_cast<std::size_t>(i)] +
                        "', column '" + c.feature_names[static_cast<std::size_t>(j)] + "'");
  std::unordered_set<std::string> labels;
  for (const auto& h : c.targets) {
    if (h.values.size() != n) throw DataError("target '" + h.label + "' length does not match cohort size");
    if (!labels.insert(h.label).second) throw DataError("duplicate target label '" + h.label + "'");
    for (const auto& v : h.values)
      if (v && !std::isfinite(*v)) throw DataError("non-finite value in target '" + h.label + "'");
  }
}

Cohort make_cohort(Cohort cohort) {
  validate(cohort);
  return cohort;
}

namespace {

std::string where(const csv::Table& t, std::size_t line, const std::string& column) {
  return t.path.string() + ":" + std::to_string(line) + ", column '" + column + "'";
}

}  // namespace

Cohort load_cohort(const std::filesystem::path& features_path, const std::filesystem::path& targets_path) {
  const auto ft = csv::read(features_path);
  static constexpr std::array<std::string_view, 4> kFixed{"subject_id", "group", "batch", "age"};
  if (ft.header.size() < kFixed.size() + 1)
    throw DataError(features_path.string() + ":" + std::to_string(ft.header_line) +
                    ": header must be subject_id,group,batch,age followed by at least one feature column");
  for (std::size_t k = 0; k < kFixed.size(); ++k)
    if (ft.header[k] != kFixed[k])
      throw DataError(features_path.string() + ":" + std::to_string(ft.header_line) + ": expected column '" +
                      std::string(kFixed[k]) + "' at position " + std::to_string(k + 1) + ", found '" +
                      ft.header[k] + "'");
  std::unordered_set<std::string> names;
  for (std::size_t k = 0; k < ft.header.size(); ++k) {
    if (ft.header[k].empty())
      throw DataError(features_path.string() + ":" + std::to_string(ft.header_line) + ": empty column name at position " +
                      std::to_string(k + 1));
    if (!names.insert(ft.header[k]).second)
      throw DataError(features_path.string() + ":" + std::to_string(ft.header_line) + ": unknown or repeated column '" +
                      ft.header[k] + "'");
  }

  Cohort c;
  const auto n = ft.rows.size();
  const auto m = ft.header.size() - kFixed.size();
  if (n == 0) throw DataError(features_path.string() + ": no subject rows");
  c.feature_names.assign(ft.header.begin() + kFixed.size(), ft.header.end());
  c.features.resize(static_cast<Index>(n), static_cast<Index>(m));
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = ft.rows[i];
    const auto& id = row.cells[0];
    if (id.empty()) throw DataError(where(ft, row.line, "subject_id") + ": empty subject_id");
    if (!row_of.emplace(id, i).second)
      throw DataError(where(ft, row.line, "subject_id") + ": duplicate subject_id '" + id + "'");
    if (row.cells[1].empty()) throw DataError(where(ft, row.line, "group") + ": empty group label");
    if (row.cells[2].empty()) throw DataError(where(ft, row.line, "batch") + ": empty batch label");
    double age = 0.0;
    if (!csv::parse_double(row.cells[3], age) || !std::isfinite(age))
      throw DataError(where(ft, row.line, "age") + ": invalid age '" + row.cells[3] + "'");
    c.subject_ids.push_back(id);
    c.group.push_back(row.cells[1]);
    c.batch.push_back(row.cells[2]);
    c.age.push_back(age);
    for (std::size_t j = 0; j < m; ++j) {
      const auto& cell = row.cells[kFixed.size() + j];
      double v = 0.0;
      if (!csv::parse_double(cell, v))
        throw DataError(where(ft, row.line, c.feature_names[j]) + ": cannot parse '" + cell + "' as a number");
      if (!std::isfinite(v))
        throw DataError(where(ft, row.line, c.feature_names[j]) + ": non-finite feature value '" + cell + "'");
      c.features(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
  }

  if (targets_path.empty()) {
    validate(c);
    return c;
  }
  const auto tt = csv::read(targets_path);
  if (tt.header.empty() || tt.header[0] != "subject_id")
    throw DataError(targets_path.string() + ":" + std::to_string(tt.header_line) +
                    ": first column must be 'subject_id'");
  std::unordered_set<std::string> tnames;
  for (std::size_t k = 1; k < tt.header.size(); ++k) {
    if (tt.header[k].empty() || tt.header[k] == "subject_id" || !tnames.insert(tt.header[k]).second)
      throw DataError(targets_path.string() + ":" + std::to_string(tt.header_line) + ": unknown or repeated column '" +
                      tt.header[k] + "'");
    c.targets.push_back({tt.header[k], std::vector<std::optional<double>>(n)});
  }
  std::unordered_set<std::string> seen;
  for (const auto& row : tt.rows) {
    const auto& id = row.cells[0];
    auto it = row_of.find(id);
    if (it == row_of.end())
      throw DataError(where(tt, row.line, "subject_id") + ": subject '" + id + "' not present in " +
                      features_path.string());
    if (!seen.insert(id).second) throw DataError(where(tt, row.line, "subject_id") + ": duplicate subject_id '" + id + "'");
    for (std::size_t k = 1; k < row.cells.size(); ++k) {
      const auto& cell = row.cells[k];
      if (cell.empty()) continue;
      double v = 0.0;
      if (!csv::parse_double(cell, v) || !std::isfinite(v))
        throw DataError(where(tt, row.line, tt.header[k]) + ": invalid target value '" + cell + "'");
      c.targets[k - 1].values[it->second] = v;
    }
  }
  validate(c);
  return c;
}

void write_cohort(const Cohort& c, const std::filesystem::path& features_path,
                  const std::filesystem::path& targets_path, const std::vector<std::string>& preamble) {
  std::ofstream f(features_path);
  if (!f) throw ConfigError("cannot write '" + features_path.string() + "'");
  for (const auto& p : preamble) f << "# " << p << '\n';
  f << "subject_id,group,batch,age";
  for (const auto& name : c.feature_names) f << ',' << csv::quote_if_needed(name);
  f << '\n';
  for (Index i = 0; i < c.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    f << csv::quote_if_needed(c.subject_ids[s]) << ',' << csv::quote_if_needed(c.group[s]) << ','
      << csv::quote_if_needed(c.batch[s]) << ',' << csv::format(c.age[s]);
    for (Index j = 0; j < c.feature_count(); ++j) f << ',' << csv::format(c.features(i, j));
    f << '\n';
  }
  if (targets_path.empty()) return;
  std::ofstream t(targets_path);
  if (!t) throw ConfigError("cannot write '" + targets_path.string() + "'");
  for (const auto& p : preamble) t << "# " << p << '\n';
  t << "subject_id";
  for (const auto& h : c.targets) t << ',' << csv::quote_if_needed(h.label);
  t << '\n';
  for (Index i = 0; i < c.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    t << csv::quote_if_needed(c.subject_ids[s]);
    for (const auto& h : c.targets) {
      t << ',';
      if (h.values[s]) t << csv::format(*h.values[s]);
    }
    t << '\n';
  }
}

PartitionScheme parse_partition_scheme(std::string_view name) {
  if (name == "Pooled" || name == "pooled" || name == "S1") return PartitionScheme::Pooled;
  if (name == "ByGroup" || name == "by_group" || name == "S3") return PartitionScheme::ByGroup;
  if (name == "ByGroupAndBatch" || name == "by_group_and_batch" || name == "S6") return PartitionScheme::ByGroupAndBatch;
  throw ConfigError("unknown partition scheme '" + std::string(name) + "' (expected Pooled, ByGroup, ByGroupAndBatch)");
}

std::string_view to_string(PartitionScheme scheme) {
  switch (scheme) {
    case PartitionScheme::Pooled: return "Pooled";
    case PartitionScheme::ByGroup: return "ByGroup";
    case PartitionScheme::ByGroupAndBatch: return "ByGroupAndBatch";
  }
  return "Pooled";
}

std::string task_name(PartitionScheme scheme, const std::string& group, const std::string& batch) {
  switch (scheme) {
    case PartitionScheme::Pooled: return "ALL";
    case PartitionScheme::ByGroup: return group;
    case PartitionScheme::ByGroupAndBatch: return group + "|" + batch;
  }
  return "ALL";
}

IndexSet TaskPartition::members(Index task, const IndexSet& rows) const {
  IndexSet out;
  for (Index r : rows)
    if (task_of[static_cast<std::size_t>(r)] == task) out.push_back(r);
  return out;
}

TaskPartition partition_tasks(const Cohort& cohort, PartitionScheme scheme) {
  TaskPartition p;
  p.scheme = scheme;
  const auto n = static_cast<std::size_t>(cohort.size());
  std::map<std::pair<std::string, std::string>, Index> cells;
  auto key = [&](std::size_t i) -> std::pair<std::string, std::string> {
    switch (scheme) {
      case PartitionScheme::Pooled: return {"", ""};
      case PartitionScheme::ByGroup: return {cohort.group[i], ""};
      case PartitionScheme::ByGroupAndBatch: return {cohort.group[i], cohort.batch[i]};
    }
    return {"", ""};
  };
  for (std::size_t i = 0; i < n; ++i) cells.emplace(key(i), 0);
  Index next = 0;
  for (auto& [k, idx] : cells) {
    idx = next++;
    p.task_names.push_back(scheme == PartitionScheme::Pooled ? "ALL" : task_name(scheme, k.first, k.second));
  }
  p.task_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.task_of[i] = cells.at(key(i));

  if (scheme == PartitionScheme::ByGroupAndBatch) {
    const auto groups = cohort.group_levels();
    const auto batches = cohort.batch_levels();
    for (const auto& g : groups)
      for (const auto& b : batches)
        if (!cells.contains({g, b}))
          p.warnings.push_back("no subjects in cell " + g + "|" + b + "; task omitted");
  }
  return p;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != means.size())
    throw std::invalid_argument("standardizer expects " + std::to_string(means.size()) + " columns, got " +
                                std::to_string(x.cols()));
  return (x.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

Matrix Standardizer::invert(const Matrix& z) const {
  if (z.cols() != means.size())
    throw std::invalid_argument("standardizer expects " + std::to_string(means.size()) + " columns, got " +
                                std::to_string(z.cols()));
  return (z.array().rowwise() * scales.transpose().array()).matrix().rowwise() + means.transpose();
}

Standardizer fit_standardizer(const Matrix& features, const IndexSet& rows) {
  if (rows.size() < 2) throw std::invalid_argument("fit_standardizer needs at least 2 rows");
  const auto m = features.cols();
  Standardizer s;
  s.means = Vector::Zero(m);
  s.scales = Vector::Ones(m);
  const double n = static_cast<double>(rows.size());
  for (Index r : rows) s.means += features.row(r).transpose();
  s.means /= n;
  Vector ss = Vector::Zero(m);
  for (Index r : rows) ss += (features.row(r).transpose() - s.means).array().square().matrix();
  for (Index j = 0; j < m; ++j) {
    const double sd = std::sqrt(ss(j) / (n - 1.0));
    // Zero-variance (or numerically so) columns are centered only.
    s.scales(j) = (sd > 1e-12 * std::max(1.0, std::abs(s.means(j)))) ? sd : 1.0;
  }
  return s;
}

Standardizer fit_standardizer(const Matrix& features) { return fit_standardizer(features, all_rows(features.rows())); }

Matrix select_rows(const Matrix& m, const IndexSet& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector select_rows(const Vector& v, const IndexSet& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

Matrix select_cols(const Matrix& m, const IndexSet& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

IndexSet all_rows(Index n) {
  IndexSet rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

}  // namespace cogmtl

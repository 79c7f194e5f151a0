#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cogmtl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = std::ptrdiff_t;
using IndexSet = std::vector<Index>;

/// Per-horizon target column, e.g. change in score at 12 months.
struct Horizon {
  std::string label;
  std::vector<std::optional<double>> values;

  /// Rows whose target is present.
  [[nodiscard]] IndexSet observed() const;
};

/// Subjects x region features with labels and per-horizon targets.
///
/// Construct through load_cohort() or make_cohort(); both validate every
/// invariant so a Cohort in hand is always well formed.
struct Cohort {
  std::vector<std::string> subject_ids;
  Matrix features;  // N x M
  std::vector<std::string> feature_names;
  std::vector<std::string> group;
  std::vector<std::string> batch;
  std::vector<double> age;
  std::vector<Horizon> targets;

  [[nodiscard]] Index size() const { return features.rows(); }
  [[nodiscard]] Index feature_count() const { return features.cols(); }
  [[nodiscard]] const Horizon& horizon(std::string_view label) const;

  /// Distinct group labels in canonical order (NC, MCI, AD first, then lexicographic).
  [[nodiscard]] std::vector<std::string> group_levels() const;
  /// Distinct batch labels, lexicographic.
  [[nodiscard]] std::vector<std::string> batch_levels() const;
};

/// Throws DataError describing the first violated invariant.
void validate(const Cohort& cohort);

/// Validates and returns the cohort.
Cohort make_cohort(Cohort cohort);

/// Reads the features and targets CSV pair and joins them on subject_id.
/// Subjects absent from the targets file get all targets missing. An empty
/// targets path loads features only.
Cohort load_cohort(const std::filesystem::path& features_path, const std::filesystem::path& targets_path);

/// Writes the two CSV files in the format load_cohort() reads (an empty
/// targets path skips the targets file). `preamble` lines are emitted as
/// leading '#' comments.
void write_cohort(const Cohort& cohort, const std::filesystem::path& features_path,
                  const std::filesystem::path& targets_path, const std::vector<std::string>& preamble = {});

enum class PartitionScheme { Pooled, ByGroup, ByGroupAndBatch };

PartitionScheme parse_partition_scheme(std::string_view name);
std::string_view to_string(PartitionScheme scheme);

struct TaskPartition {
  std::vector<Index> task_of;  // per subject, in 0..S-1
  std::vector<std::string> task_names;
  PartitionScheme scheme = PartitionScheme::Pooled;
  std::vector<std::string> warnings;

  [[nodiscard]] Index task_count() const { return static_cast<Index>(task_names.size()); }
  /// Members of `task` restricted to `rows`, preserving the order of `rows`.
  [[nodiscard]] IndexSet members(Index task, const IndexSet& rows) const;
};

/// Task name for a subject under `scheme` ("ALL", "<group>", or "<group>|<batch>").
std::string task_name(PartitionScheme scheme, const std::string& group, const std::string& batch);

/// Tasks ordered lexicographically by (group, batch). Cells with no subjects are
/// omitted and a warning recorded.
TaskPartition partition_tasks(const Cohort& cohort, PartitionScheme scheme);

/// Column z-scoring fitted on a row subset.
struct Standardizer {
  Vector means;
  Vector scales;  // > 0; zero-variance columns clamped to 1

  [[nodiscard]] Matrix apply(const Matrix& x) const;
  [[nodiscard]] Matrix invert(const Matrix& z) const;
};

/// Fits column means and sample standard deviations (N-1) on `rows` only.
Standardizer fit_standardizer(const Matrix& features, const IndexSet& rows);
/// Convenience overload over all rows.
Standardizer fit_standardizer(const Matrix& features);

// Row/element selection helpers used throughout the pipeline.
Matrix select_rows(const Matrix& m, const IndexSet& rows);
Vector select_rows(const Vector& v, const IndexSet& rows);
Matrix select_cols(const Matrix& m, const IndexSet& cols);
IndexSet all_rows(Index n);

}  // namespace cogmtl

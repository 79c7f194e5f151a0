#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cogmtl/core.hpp"
#include "cogmtl/pls.hpp"
#include "cogmtl/solvers.hpp"

namespace cogmtl {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// A metric that is not defined on the given input (e.g. correlation of a constant).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Sample Pearson correlation; needs >= 3 points and both inputs non-constant.
double pearson_r(const Vector& y, const Vector& yhat);
double mae(const Vector& y, const Vector& yhat);
double mse(const Vector& y, const Vector& yhat);
double rmse(const Vector& y, const Vector& yhat);

enum class Metric { PearsonR, MAE };
std::string_view to_string(Metric metric);
std::optional<double> try_metric(Metric metric, const Vector& y, const Vector& yhat);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Subject-level percentile bootstrap of `metric` over (y, yhat) pairs.
/// Throws UndefinedMetric if more than 20% of resamples leave the metric undefined.
Interval bootstrap_ci(const Vector& y, const Vector& yhat, Metric metric, int resamples = 1000, double level = 0.95,
                      std::uint64_t seed = 0);

/// Bootstrap for repeated cross-validation: each resample draws one subject
/// multiset and evaluates the repeat-averaged metric over the columns of
/// `predictions` (N x repeats). The interval brackets the statistic reported as
/// the point estimate (mean over repeats of the per-repeat metric).
Interval bootstrap_ci_repeated(const Vector& y, const Matrix& predictions, Metric metric, int resamples = 1000,
                               double level = 0.95, std::uint64_t seed = 0);

/// Mean over repeats of the per-repeat metric, skipping undefined repeats.
std::optional<double> repeated_metric(const Vector& y, const Matrix& predictions, Metric metric);

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

/// Sort-and-deal stratification: rows sorted by target, cut into consecutive
/// bins of k, and each bin dealt to the k folds in a seeded random order.
/// Returns k disjoint index sets covering `rows`; sizes differ by at most 1.
std::vector<IndexSet> stratified_folds(const IndexSet& rows, const Vector& target, int k, std::uint64_t seed);

/// Same, over the observed entries of a target column.
std::vector<IndexSet> stratified_folds(const std::vector<std::optional<double>>& target, int k, std::uint64_t seed);

/// Complement of `test` within `rows`, in the order of `rows`.
IndexSet complement(const IndexSet& rows, const IndexSet& test);

/// Target column as a dense vector with NaN for missing entries.
Vector target_vector(const Horizon& horizon);

// ---------------------------------------------------------------------------
// Methods and hyperparameter grids
// ---------------------------------------------------------------------------

enum class Method { SepEN, AllEN, MTLasso, JFS, Dirty, TraceNorm };
enum class Harmonization { None, ComBat, ComBatAge, ComBatRegAge, PLS, PLSAge };

Method parse_method(std::string_view name);
Harmonization parse_harmonization(std::string_view name);
std::string_view to_string(Method method);
std::string_view to_string(Harmonization harmonization);
bool is_multitask(Method method);
MtlPenalty penalty_of(Method method);

struct MethodSpec {
  Method method = Method::AllEN;
  Harmonization harmonization = Harmonization::None;
  PartitionScheme partition = PartitionScheme::ByGroup;
};

/// {1e-3, 10^-2.5, ..., 1e2} followed by 200, 250, ..., 500.
std::vector<double> default_rho1_grid();
/// {1e-3, 10^-2.5, ..., 1e2} followed by 200, 250, ..., 1000.
std::vector<double> default_rho2_grid();

struct Grid {
  std::vector<double> rho1 = default_rho1_grid();
  std::vector<double> rho2 = default_rho2_grid();
  int lambda_count = 100;
  double lambda_min_ratio = 1e-4;
  double alpha = 0.5;
  std::vector<Index> pls_components = kPlsComponentCandidates;

  /// Strictly positive and strictly ascending penalty sets; throws std::invalid_argument.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Single train/test split
// ---------------------------------------------------------------------------

struct PipelineOptions {
  Grid grid;
  int inner_folds = 10;
  SolveOptions solve;
  StackingOptions stacking;
  std::optional<RegionBlocks> blocks;  // defaults to contiguous_blocks(M, max(2, ceil(M / 10)))
  IndexSet harmonize_rows;             // if non-empty, the harmonizer is fitted on these rows instead of train
};

struct SplitResult {
  Vector predictions;     // aligned with `test`
  std::string selection;  // chosen hyperparameters, e.g. "lambda=0.01"
};

/// Harmonize and standardize on the training rows, select hyperparameters by
/// inner stratified CV, refit on all training rows, predict the test rows.
/// `target` is the full-length vector (NaN for missing); train rows must be observed.
SplitResult run_split(const Cohort& cohort, const Vector& target, const TaskPartition& partition,
                      const MethodSpec& spec, const PipelineOptions& opts, const IndexSet& train, const IndexSet& test,
                      std::uint64_t seed);

/// Default region blocks for a feature count.
RegionBlocks default_blocks(Index feature_count);

/// Applies the ComBat variants (fitted on `fit_rows`) to every row. PLS
/// variants and None return the raw features; PLS adaptation happens after
/// standardization inside run_split().
Matrix harmonize_features(const Cohort& cohort, Harmonization harmonization, const IndexSet& fit_rows);

// ---------------------------------------------------------------------------
// Serializable linear models (no harmonization step)
// ---------------------------------------------------------------------------

/// Per-task linear predictor on standardized features:
/// yhat = ((x - means) / scales) . weights.col(t) + biases(t).
struct LinearModel {
  Method method = Method::AllEN;
  PartitionScheme partition = PartitionScheme::Pooled;
  std::vector<std::string> task_names;
  std::vector<std::pair<std::string, double>> hyperparameters;
  Standardizer standardizer;
  Matrix weights;  // M x S
  Vector biases;   // S

  [[nodiscard]] Index task_index(const std::string& name) const;  // throws DataError if unknown
};

/// Fits on every observed subject of `horizon`. Missing entries of `fixed`
/// (keys "lambda", "rho1", "rho2") are selected by inner CV.
LinearModel fit_linear_model(const Cohort& cohort, const MethodSpec& spec, const std::string& horizon,
                             const PipelineOptions& opts, std::uint64_t seed,
                             const std::vector<std::pair<std::string, double>>& fixed = {});

/// Predictions for every subject; throws DataError on a feature count mismatch or unknown task.
Vector predict(const LinearModel& model, const Cohort& cohort);

// ---------------------------------------------------------------------------
// Repeated nested cross-validation
// ---------------------------------------------------------------------------

/// Groups whose evaluated N falls below this are flagged as untrustworthy.
inline constexpr Index kLowNThreshold = 20;

struct CvOptions {
  int repeats = 10;
  int outer_folds = 10;
  PipelineOptions pipeline;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool harmonize_global = false;  // fit the harmonizer once on all usable subjects
  int bootstrap_resamples = 1000;
  double ci_level = 0.95;
};

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  std::vector<std::optional<double>> per_repeat;
};

struct GroupResult {
  std::string group;  // a group level or "ALL"
  Index n = 0;
  bool low_n = false;
  MetricSummary r;
  MetricSummary mae;
};

struct EvalEntry {
  std::string method;
  std::string harmonization;
  std::string partition;
  std::string horizon;
  std::vector<GroupResult> groups;
  std::vector<std::string> selections;  // per (repeat, fold), row-major
  std::vector<std::string> warnings;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Row label used in tables: "<method>" or "<harmonization>_<method>".
std::string entry_label(const EvalEntry& entry);

EvalEntry nested_cv(const Cohort& cohort, const MethodSpec& spec, const std::string& horizon, const CvOptions& opts);

/// Raw per-repeat predictions (N x repeats, NaN where unobserved) from the same
/// procedure nested_cv() summarizes.
Matrix cross_validated_predictions(const Cohort& cohort, const MethodSpec& spec, const std::string& horizon,
                                   const CvOptions& opts, std::vector<std::string>* selections = nullptr);

/// Per-group summaries from a prediction matrix; exposed for custom reports.
std::vector<GroupResult> summarize_groups(const Cohort& cohort, const Vector& target, const Matrix& predictions,
                                          const CvOptions& opts);

}  // namespace cogmtl

#pragma once

#include <array>
#include <string>
#include <vector>

#include "cogmtl/core.hpp"

namespace cogmtl {

/// Location/scale batch model x = alpha + C beta + gamma_b + delta_b eps,
/// with empirical-Bayes shrunk gamma*, delta* stored in raw feature units so
/// that combat_apply is (x - alpha - C beta - gamma*) / delta* + alpha + C beta.
struct CombatParams {
  std::vector<std::string> batches;  // B levels, lexicographic
  Vector grand_mean;                 // M
  Matrix covariate_coef;             // M x C
  Matrix gamma_star;                 // B x M
  Matrix delta_star;                 // B x M, > 0
  Vector pooled_var;                 // M, > 0
  Matrix gamma_hat;                  // B x M, standardized units (before shrinkage)
  Matrix delta_hat;                  // B x M, standardized variances (before shrinkage)
  int eb_iterations = 0;             // largest fixed-point iteration count over batches/features

  [[nodiscard]] Index covariate_count() const { return covariate_coef.cols(); }
  [[nodiscard]] Index batch_index(const std::string& label) const;  // throws DataError if unseen
};

struct CombatOptions {
  double tolerance = 1e-6;
  int max_iterations = 100;
};

/// Parametric empirical-Bayes ComBat. `covariates` is N x C (C may be 0).
CombatParams combat_fit(const Matrix& features, const std::vector<std::string>& batch, const Matrix& covariates,
                        const CombatOptions& opts = {});

/// Harmonizes any rows with a previously fitted model (no refit).
Matrix combat_apply(const Matrix& features, const std::vector<std::string>& batch, const Matrix& covariates,
                    const CombatParams& params);

struct ResidualizerParams {
  Matrix covariate_coef;  // M x C
  Vector intercepts;      // M
};

/// Per-feature least squares on [1, covariates] over `rows`.
ResidualizerParams fit_residualizer(const Matrix& features, const Matrix& covariates, const IndexSet& rows);

/// features - intercept - covariates * coef^T, for every row.
Matrix residualize(const Matrix& features, const Matrix& covariates, const ResidualizerParams& params);

/// Fit on `rows`, apply to all rows.
Matrix residualize(const Matrix& features, const Matrix& covariates, const IndexSet& rows);

/// Display threshold for per-feature batch t maps (uncorrected p < 0.05).
inline constexpr double kBatchTThreshold = 2.0;

struct BatchDiagnostic {
  std::array<std::string, 2> levels;  // t = mean(levels[0]) - mean(levels[1]) scaled
  Vector t;                           // M Welch statistics

  [[nodiscard]] double max_abs() const;
  [[nodiscard]] Index count_above(double threshold = kBatchTThreshold) const;
};

/// Welch two-sample t per feature between the two batch levels present in `rows`.
BatchDiagnostic batch_t_diagnostic(const Matrix& features, const std::vector<std::string>& batch, const IndexSet& rows);

/// Single-column design matrix from a per-subject covariate.
Matrix covariate_column(const std::vector<double>& values);

}  // namespace cogmtl

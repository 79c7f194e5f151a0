#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cogmtl/core.hpp"
#include "cogmtl/solvers.hpp"

namespace cogmtl {

enum class PlsResponse { BatchOnly, BatchAndAge };

/// Rank-K PLS decomposition of centered X against centered Y (NIPALS with deflation).
struct PlsModel {
  Vector x_mean;
  Vector y_mean;
  Matrix x_weights;    // M_b x K
  Matrix x_loadings;   // M_b x K
  Matrix y_loadings;   // R x K
  Matrix rotations;    // M_b x K, scores = (X - mean) * rotations
  Vector y_explained;  // K, fraction of total Y variance captured per component
  PlsResponse response = PlsResponse::BatchOnly;

  [[nodiscard]] Index components() const { return x_weights.cols(); }
  [[nodiscard]] Matrix scores(const Matrix& x) const;
  /// X with the K fitted latent directions deflated out (mean restored).
  [[nodiscard]] Matrix remove_components(const Matrix& x) const;
};

/// Requires 1 <= k <= min(N - 1, M_b) and every Y column non-constant.
PlsModel pls_fit(const Matrix& x, const Matrix& y, Index k);

/// Response matrix coding the scanner batch as -1/+1 (one column per level
/// beyond the first when B > 2), optionally with standardized age appended.
Matrix batch_response(const std::vector<std::string>& batch, const std::vector<double>* age);

/// Adapts a training block: removes the k-dimensional batch-predictive subspace.
Matrix domain_adapt(const Matrix& x_block, const std::vector<std::string>& batch, const std::vector<double>* age,
                    Index k);

/// Default candidate component counts.
inline const std::vector<Index> kPlsComponentCandidates{5, 10, 15, 17, 20, 25};

/// Every feature belongs to exactly one block; each block non-empty.
struct RegionBlocks {
  std::vector<Index> block_of;  // per feature
  std::vector<std::string> block_names;

  [[nodiscard]] Index block_count() const { return static_cast<Index>(block_names.size()); }
  [[nodiscard]] IndexSet members(Index block) const;
  void validate(Index feature_count) const;
};

/// `count` contiguous blocks of near-equal size.
RegionBlocks contiguous_blocks(Index feature_count, Index count);

/// Block map CSV `feature_name,block_name`; block order follows first appearance.
RegionBlocks load_block_map(const std::filesystem::path& path, const std::vector<std::string>& feature_names);
void write_block_map(const RegionBlocks& blocks, const std::vector<std::string>& feature_names,
                     const std::filesystem::path& path, const std::vector<std::string>& preamble = {});

/// Blockwise PLS adaptation fitted on training rows and reusable on any rows.
struct DomainAdapter {
  RegionBlocks blocks;
  std::vector<PlsModel> models;  // per block; zero components means the block passes through
  PlsResponse response = PlsResponse::BatchOnly;
  Index requested_components = 0;

  [[nodiscard]] Matrix apply(const Matrix& x) const;
};

/// Components actually removed from a block: min(k, M_b - 1, N - 1), never the whole block.
Index effective_components(Index k, Index block_width, Index rows);

DomainAdapter fit_domain_adapter(const Matrix& x, const std::vector<std::string>& batch, const std::vector<double>* age,
                                 const RegionBlocks& blocks, Index k);

/// RBF kernel ridge regression: f(x) = ybar + sum_i a_i exp(-gamma ||x - x_i||^2).
struct KernelRidge {
  Matrix support;
  Vector dual;
  double y_mean = 0.0;
  double gamma = 1.0;
  double ridge = 1.0;

  [[nodiscard]] Vector predict(const Matrix& x) const;
};

KernelRidge fit_kernel_ridge(const Matrix& x, const Vector& y, double gamma, double ridge);

struct StackingOptions {
  double kernel_gamma = 0.0;  // 0 selects 1 / M_b per block
  double ridge = 1.0;
  int internal_folds = 5;
  int combiner_lambdas = 20;
  double combiner_alpha = 0.5;
  std::uint64_t seed = 0;
};

/// Per-block base learners combined by an elastic net trained on out-of-fold predictions.
struct StackedModel {
  RegionBlocks blocks;
  std::vector<KernelRidge> base;
  Standardizer combiner_scaler;
  ElasticNetModel combiner;

  [[nodiscard]] Matrix block_predictions(const Matrix& x) const;
  [[nodiscard]] Vector predict(const Matrix& x) const;
};

/// Fold index per row for the internal stacking split (seeded permutation, round robin).
std::vector<Index> stacking_folds(Index rows, int folds, std::uint64_t seed);

/// N x B matrix whose row i holds block predictions from base learners not trained on row i.
Matrix out_of_fold_block_predictions(const Matrix& x, const Vector& y, const RegionBlocks& blocks,
                                     const StackingOptions& opts, const std::vector<Index>& fold_of);

StackedModel fit_stacked(const Matrix& x, const Vector& y, const RegionBlocks& blocks, const StackingOptions& opts = {});

}  // namespace cogmtl

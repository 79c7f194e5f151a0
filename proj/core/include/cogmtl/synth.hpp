#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cogmtl/core.hpp"
#include "cogmtl/pls.hpp"
#include "cogmtl/solvers.hpp"

namespace cogmtl {

/// Synthetic cohort with planted multitask structure, scanner batch effects
/// and age confounding. Defaults give a desk-scale cohort of 360 subjects and
/// 122 features.
struct SynthSpec {
  std::vector<std::string> groups{"NC", "MCI", "AD"};
  std::vector<std::string> batches{"1.5T", "3T"};
  Index subjects_per_cell = 60;
  /// Optional per-cell sizes, group-major (groups x batches); overrides subjects_per_cell.
  std::vector<Index> cell_sizes;

  Index features = 122;
  Index blocks = 13;
  Index shared_support = 10;    // nonzero rows shared by every task
  Index task_support = 4;       // extra nonzero rows private to each task
  double task_jitter = 0.25;    // task-specific perturbation of shared coefficients
  double feature_correlation = 0.3;  // AR(1) correlation between adjacent features
  double noise_sd = 1.0;

  /// Per-batch location shift and scale factor applied to every feature (sd units).
  std::vector<double> batch_shift{0.0, 1.0};
  std::vector<double> batch_scale{1.0, 1.0};

  double age_slope = 0.05;  // feature change per year of age
  double age_mean = 73.0;
  double age_sd = 7.0;
  double age_batch_offset = 2.0;  // mean age difference between consecutive batches

  std::vector<double> group_offsets{0.0, 1.5, 4.0};  // target mean per group
  std::vector<std::string> horizons{"M06", "M12", "M24", "M36"};
  std::vector<double> horizon_scale{0.5, 1.0, 1.5, 2.0};
  std::vector<double> missing_rate{0.0, 0.05, 0.15, 0.3};

  std::uint64_t seed = 0;

  /// Throws ConfigError on an inconsistent spec and DataError on an empty cell.
  void validate() const;
  [[nodiscard]] Index cell_size(std::size_t group, std::size_t batch) const;
};

struct SynthTruth {
  Matrix weights;  // M x G, one column per group task
  std::vector<std::string> task_names;
  std::vector<double> group_offsets;
  std::vector<double> batch_shift;
  std::vector<double> batch_scale;
  double age_slope = 0.0;
  double age_mean = 0.0;
  Matrix clean_features;  // N x M before batch and age effects
};

struct SynthCohort {
  Cohort cohort;
  SynthTruth truth;
  RegionBlocks blocks;
};

/// Subjects are laid out cell by cell (group-major). Every draw comes from
/// streams derived from spec.seed, so equal specs give identical cohorts.
SynthCohort generate(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Penalty for the brute-force oracle: either single-task elastic net
/// (p1 = lambda, p2 = alpha) or a multitask penalty (p1 = rho1, p2 = rho2).
struct PenaltySpec {
  bool elastic_net = false;
  MtlPenalty penalty = MtlPenalty::MTLasso;
  double p1 = 0.0;
  double p2 = 0.0;

  static PenaltySpec make_elastic_net(double lambda, double alpha) { return {true, MtlPenalty::MTLasso, lambda, alpha}; }
  static PenaltySpec make_multitask(MtlPenalty penalty, double rho1, double rho2) { return {false, penalty, rho1, rho2}; }
};

struct GridBox {
  double lo = -3.0;
  double hi = 3.0;
  double step = 0.05;

  [[nodiscard]] Index points() const;
};

inline constexpr double kBruteForceBudget = 1e7;

struct BruteForceResult {
  Matrix w;  // M x S
  Vector biases;
  double objective = 0.0;
  double grid_points = 0.0;
};

/// Penalized objective (biases profiled out) at W; the value the oracle minimizes.
double penalized_objective(const MultiTaskData& data, const PenaltySpec& penalty, const Matrix& w);

/// Minimizer of the penalized objective over the lattice box^(M*S); biases are
/// profiled out exactly. Throws std::invalid_argument if the lattice exceeds `budget`.
BruteForceResult brute_force_penalized_ls(const MultiTaskData& data, const PenaltySpec& penalty, const GridBox& box = {},
                                          double budget = kBruteForceBudget);

/// Single-task convenience overload.
BruteForceResult brute_force_penalized_ls(const Matrix& x, const Vector& y, const PenaltySpec& penalty,
                                          const GridBox& box = {}, double budget = kBruteForceBudget);

}  // namespace cogmtl

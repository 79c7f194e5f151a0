#include <algorithm>
#include <cmath>
#include <numeric>

#include "cogmtl/errors.hpp"
#include "cogmtl/random.hpp"
#include "cogmtl/synth.hpp"

namespace cogmtl {

namespace {

enum Stream : std::uint64_t { kWeights = 1, kFeatures, kAge, kNoise, kMissing };

std::string subject_id(Index i) {
  std::string digits = std::to_string(i + 1);
  return "S" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

}  // namespace

Index SynthSpec::cell_size(std::size_t group, std::size_t batch) const {
  if (cell_sizes.empty()) return subjects_per_cell;
  return cell_sizes[group * batches.size() + batch];
}

void SynthSpec::validate() const {
  if (groups.empty() || batches.empty()) throw ConfigError("synthetic spec needs at least one group and one batch");
  if (!cell_sizes.empty() && cell_sizes.size() != groups.size() * batches.size())
    throw ConfigError("synthetic spec: cell_sizes must list groups x batches entries");
  if (features < 1) throw ConfigError("synthetic spec: features must be positive");
  if (blocks < 1 || blocks > features) throw ConfigError("synthetic spec: blocks must lie in [1, features]");
  if (shared_support < 0 || task_support < 0 || shared_support + task_support * static_cast<Index>(groups.size()) > features)
    throw ConfigError("synthetic spec: supports must be non-negative and fit within the feature count");
  if (!(noise_sd >= 0.0) || !(task_jitter >= 0.0) || !(age_sd >= 0.0))
    throw ConfigError("synthetic spec: noise_sd, task_jitter and age_sd must be non-negative");
  if (!(std::abs(feature_correlation) < 1.0)) throw ConfigError("synthetic spec: feature_correlation must lie in (-1, 1)");
  if (batch_shift.size() != batches.size() || batch_scale.size() != batches.size())
    throw ConfigError("synthetic spec: batch_shift and batch_scale need one entry per batch");
  for (double d : batch_scale)
    if (!(d > 0.0)) throw ConfigError("synthetic spec: batch scale factors must be positive");
  if (group_offsets.size() != groups.size()) throw ConfigError("synthetic spec: group_offsets needs one entry per group");
  if (horizons.empty()) throw ConfigError("synthetic spec: at least one horizon is required");
  if (horizon_scale.size() != horizons.size() || missing_rate.size() != horizons.size())
    throw ConfigError("synthetic spec: horizon_scale and missing_rate need one entry per horizon");
  for (double m : missing_rate)
    if (!(m >= 0.0 && m < 1.0)) throw ConfigError("synthetic spec: missing rates must lie in [0, 1)");
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Index n = cell_size(g, b);
      if (n < 0) throw ConfigError("synthetic spec: cell sizes must be non-negative");
      if (n == 0) throw DataError("synthetic spec: cell (" + groups[g] + ", " + batches[b] + ") is empty");
    }
}

SynthCohort generate(const SynthSpec& spec) {
  spec.validate();
  const Index m = spec.features;
  const auto g_count = spec.groups.size();
  const auto b_count = spec.batches.size();
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthCohort out;
  SynthTruth& truth = out.truth;
  truth.task_names = spec.groups;
  truth.group_offsets = spec.group_offsets;
  truth.batch_shift = spec.batch_shift;
  truth.batch_scale = spec.batch_scale;
  truth.age_slope = spec.age_slope;
  truth.age_mean = spec.age_mean;

  {
    auto rng = make_rng(spec.seed, {kWeights});
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    truth.weights = Matrix::Zero(m, static_cast<Index>(g_count));
    for (Index s = 0; s < spec.shared_support; ++s) {
      const Index row = perm[static_cast<std::size_t>(s)];
      const double base = normal(rng);
      for (std::size_t t = 0; t < g_count; ++t)
        truth.weights(row, static_cast<Index>(t)) = base + spec.task_jitter * normal(rng);
    }
    Index next = spec.shared_support;
    for (std::size_t t = 0; t < g_count; ++t)
      for (Index s = 0; s < spec.task_support; ++s)
        truth.weights(perm[static_cast<std::size_t>(next++)], static_cast<Index>(t)) = normal(rng);
  }

  Index n = 0;
  for (std::size_t g = 0; g < g_count; ++g)
    for (std::size_t b = 0; b < b_count; ++b) n += spec.cell_size(g, b);

  Cohort& c = out.cohort;
  c.features.resize(n, m);
  truth.clean_features.resize(n, m);
  for (Index j = 0; j < m; ++j) c.feature_names.push_back("R" + std::to_string(j + 1));

  auto feature_rng = make_rng(spec.seed, {kFeatures});
  auto age_rng = make_rng(spec.seed, {kAge});
  auto noise_rng = make_rng(spec.seed, {kNoise});
  auto missing_rng = make_rng(spec.seed, {kMissing});
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double rho = spec.feature_correlation;
  const double innovation = std::sqrt(1.0 - rho * rho);

  for (const auto& label : spec.horizons) c.targets.push_back(Horizon{label, {}});

  Index i = 0;
  for (std::size_t g = 0; g < g_count; ++g) {
    for (std::size_t b = 0; b < b_count; ++b) {
      for (Index k = 0; k < spec.cell_size(g, b); ++k, ++i) {
        c.subject_ids.push_back(subject_id(i));
        c.group.push_back(spec.groups[g]);
        c.batch.push_back(spec.batches[b]);
        const double age =
            spec.age_mean + spec.age_batch_offset * static_cast<double>(b) + spec.age_sd * normal(age_rng);
        c.age.push_back(age);

        double prev = normal(feature_rng);
        truth.clean_features(i, 0) = prev;
        for (Index j = 1; j < m; ++j) {
          prev = rho * prev + innovation * normal(feature_rng);
          truth.clean_features(i, j) = prev;
        }
        // x = alpha + age * beta + gamma_b + delta_b * eps, with alpha = 0.
        const double age_effect = spec.age_slope * (age - spec.age_mean);
        c.features.row(i) = (spec.batch_scale[b] * truth.clean_features.row(i)).array() + spec.batch_shift[b] + age_effect;

        const double signal = spec.group_offsets[g] + truth.clean_features.row(i).dot(truth.weights.col(static_cast<Index>(g)));
        for (std::size_t h = 0; h < spec.horizons.size(); ++h) {
          const double value = spec.horizon_scale[h] * (signal + spec.noise_sd * normal(noise_rng));
          const bool missing = uniform(missing_rng) < spec.missing_rate[h];
          c.targets[h].values.push_back(missing ? std::nullopt : std::optional<double>(value));
        }
      }
    }
  }

  out.blocks = contiguous_blocks(m, spec.blocks);
  out.cohort = make_cohort(std::move(out.cohort));
  return out;
}

}  // namespace cogmtl

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "cogmtl/errors.hpp"
#include "cogmtl/eval.hpp"
#include "cogmtl/random.hpp"

namespace cogmtl {

std::vector<IndexSet> stratified_folds(const IndexSet& rows, const Vector& target, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be at least 2");
  if (static_cast<Index>(rows.size()) != target.size())
    throw std::invalid_argument("stratified_folds: rows and target differ in length");
  if (static_cast<Index>(rows.size()) < k)
    throw DataError("stratified_folds: " + std::to_string(rows.size()) + " usable subjects for " + std::to_string(k) +
                    " folds");
  for (Index i = 0; i < target.size(); ++i)
    if (!std::isfinite(target(i))) throw DataError("stratified_folds: non-finite target");

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Ties keep input order so the partition depends only on (values, seed).
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return target(static_cast<Index>(a)) < target(static_cast<Index>(b)); });

  auto rng = make_rng(seed, {0xf01dULL});
  std::vector<IndexSet> folds(static_cast<std::size_t>(k));
  std::vector<int> slots(static_cast<std::size_t>(k));
  std::iota(slots.begin(), slots.end(), 0);
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(k)) {
    const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(k));
    std::shuffle(slots.begin(), slots.end(), rng);
    if (stop - start < static_cast<std::size_t>(k)) {
      // Partial bin: give its members to the currently smallest folds.
      std::stable_sort(slots.begin(), slots.end(), [&](int a, int b) {
        return folds[static_cast<std::size_t>(a)].size() < folds[static_cast<std::size_t>(b)].size();
      });
    }
    for (std::size_t j = start; j < stop; ++j)
      folds[static_cast<std::size_t>(slots[j - start])].push_back(rows[order[j]]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<IndexSet> stratified_folds(const std::vector<std::optional<double>>& target, int k, std::uint64_t seed) {
  IndexSet rows;
  std::vector<double> values;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i]) {
      rows.push_back(static_cast<Index>(i));
      values.push_back(*target[i]);
    }
  }
  return stratified_folds(rows, Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())), k, seed);
}

IndexSet complement(const IndexSet& rows, const IndexSet& test) {
  std::unordered_set<Index> excluded(test.begin(), test.end());
  IndexSet out;
  out.reserve(rows.size());
  for (Index r : rows)
    if (!excluded.count(r)) out.push_back(r);
  return out;
}

Vector target_vector(const Horizon& horizon) {
  Vector v(static_cast<Index>(horizon.values.size()));
  for (std::size_t i = 0; i < horizon.values.size(); ++i)
    v(static_cast<Index>(i)) = horizon.values[i] ? *horizon.values[i] : std::numeric_limits<double>::quiet_NaN();
  return v;
}

}  // namespace cogmtl

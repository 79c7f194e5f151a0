#include <algorithm>
#include <cmath>
#include <limits>

#include "cogmtl/eval.hpp"
#include "cogmtl/random.hpp"

namespace cogmtl {

namespace {

void check_pair(const Vector& y, const Vector& yhat, const char* name) {
  if (y.size() != yhat.size()) throw std::invalid_argument(std::string(name) + ": length mismatch");
  if (y.size() == 0) throw std::invalid_argument(std::string(name) + ": empty input");
}

}  // namespace

double pearson_r(const Vector& y, const Vector& yhat) {
  check_pair(y, yhat, "pearson_r");
  if (y.size() < 3) throw UndefinedMetric("pearson_r: needs at least 3 points");
  const Vector a = y.array() - y.mean();
  const Vector b = yhat.array() - yhat.mean();
  const double saa = a.squaredNorm();
  const double sbb = b.squaredNorm();
  const double tiny = 1e-28 * static_cast<double>(y.size());
  if (!(saa > tiny * std::max(1.0, y.squaredNorm())) || !(sbb > tiny * std::max(1.0, yhat.squaredNorm())))
    throw UndefinedMetric("pearson_r: constant input");
  return std::clamp(a.dot(b) / std::sqrt(saa * sbb), -1.0, 1.0);
}

double mae(const Vector& y, const Vector& yhat) {
  check_pair(y, yhat, "mae");
  return (y - yhat).cwiseAbs().mean();
}

double mse(const Vector& y, const Vector& yhat) {
  check_pair(y, yhat, "mse");
  return (y - yhat).squaredNorm() / static_cast<double>(y.size());
}

double rmse(const Vector& y, const Vector& yhat) { return std::sqrt(mse(y, yhat)); }

std::string_view to_string(Metric metric) { return metric == Metric::PearsonR ? "R" : "MAE"; }

std::optional<double> try_metric(Metric metric, const Vector& y, const Vector& yhat) {
  try {
    return metric == Metric::PearsonR ? pearson_r(y, yhat) : mae(y, yhat);
  } catch (const UndefinedMetric&) {
    return std::nullopt;
  }
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

template <class Statistic>
Interval percentile_bootstrap(Index n, int resamples, double level, std::uint64_t seed, Statistic&& stat) {
  if (n < 10) throw std::invalid_argument("bootstrap_ci: needs at least 10 subjects");
  if (resamples < 1) throw std::invalid_argument("bootstrap_ci: resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level must lie in (0, 1)");
  auto rng = make_rng(seed, {0xb007ULL});
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  IndexSet sample(static_cast<std::size_t>(n));
  int undefined = 0;
  for (int b = 0; b < resamples; ++b) {
    for (auto& s : sample) s = pick(rng);
    if (auto v = stat(sample))
      values.push_back(*v);
    else
      ++undefined;
  }
  if (undefined > resamples / 5)
    throw UndefinedMetric("bootstrap_ci: metric undefined on " + std::to_string(undefined) + " of " +
                          std::to_string(resamples) + " resamples");
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(values, tail), quantile_sorted(values, 1.0 - tail)};
}

}  // namespace

Interval bootstrap_ci(const Vector& y, const Vector& yhat, Metric metric, int resamples, double level,
                      std::uint64_t seed) {
  check_pair(y, yhat, "bootstrap_ci");
  return percentile_bootstrap(y.size(), resamples, level, seed, [&](const IndexSet& s) {
    return try_metric(metric, select_rows(y, s), select_rows(yhat, s));
  });
}

std::optional<double> repeated_metric(const Vector& y, const Matrix& predictions, Metric metric) {
  if (predictions.rows() != y.size()) throw std::invalid_argument("repeated_metric: row mismatch");
  double sum = 0.0;
  int count = 0;
  for (Index r = 0; r < predictions.cols(); ++r) {
    if (auto v = try_metric(metric, y, predictions.col(r))) {
      sum += *v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

Interval bootstrap_ci_repeated(const Vector& y, const Matrix& predictions, Metric metric, int resamples, double level,
                               std::uint64_t seed) {
  if (predictions.rows() != y.size()) throw std::invalid_argument("bootstrap_ci_repeated: row mismatch");
  return percentile_bootstrap(y.size(), resamples, level, seed, [&](const IndexSet& s) {
    return repeated_metric(select_rows(y, s), select_rows(predictions, s), metric);
  });
}

}  // namespace cogmtl

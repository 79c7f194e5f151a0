#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "cogmtl/errors.hpp"
#include "cogmtl/eval.hpp"
#include "cogmtl/random.hpp"

namespace cogmtl {

namespace {

constexpr std::uint64_t kOuterFoldStream = 10;
constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kBootstrapStream = 12;

struct MethodName {
  Method value;
  std::string_view name;
};
constexpr MethodName kMethods[] = {{Method::SepEN, "SEP-EN"}, {Method::AllEN, "ALL-EN"},
                                   {Method::MTLasso, "MTLasso"}, {Method::JFS, "JFS"},
                                   {Method::Dirty, "Dirty"},     {Method::TraceNorm, "TraceNorm"}};

struct HarmonizationName {
  Harmonization value;
  std::string_view name;
};
constexpr HarmonizationName kHarmonizations[] = {
    {Harmonization::None, "none"},          {Harmonization::ComBat, "ComBat"},
    {Harmonization::ComBatAge, "ComBat_Age"}, {Harmonization::ComBatRegAge, "ComBat_RegAge"},
    {Harmonization::PLS, "PLS"},            {Harmonization::PLSAge, "PLS_Age"}};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  return out;
}

std::vector<double> power_grid() {
  std::vector<double> out;
  for (int i = -6; i <= 4; ++i) out.push_back(std::pow(10.0, i / 2.0));
  return out;
}

}  // namespace

Method parse_method(std::string_view name) {
  for (const auto& m : kMethods)
    if (lower(m.name) == lower(name)) return m.value;
  if (lower(name) == "trace") return Method::TraceNorm;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected SEP-EN, ALL-EN, MTLasso, JFS, Dirty or TraceNorm)");
}

Harmonization parse_harmonization(std::string_view name) {
  for (const auto& h : kHarmonizations)
    if (lower(h.name) == lower(name)) return h.value;
  throw ConfigError("unknown harmonization '" + std::string(name) +
                    "' (expected none, ComBat, ComBat_Age, ComBat_RegAge, PLS or PLS_Age)");
}

std::string_view to_string(Method method) {
  for (const auto& m : kMethods)
    if (m.value == method) return m.name;
  return "?";
}

std::string_view to_string(Harmonization harmonization) {
  for (const auto& h : kHarmonizations)
    if (h.value == harmonization) return h.name;
  return "?";
}

bool is_multitask(Method method) { return method != Method::SepEN && method != Method::AllEN; }

MtlPenalty penalty_of(Method method) {
  switch (method) {
    case Method::MTLasso: return MtlPenalty::MTLasso;
    case Method::JFS: return MtlPenalty::JFS;
    case Method::Dirty: return MtlPenalty::Dirty;
    case Method::TraceNorm: return MtlPenalty::TraceNorm;
    default: throw std::invalid_argument("penalty_of: " + std::string(to_string(method)) + " is not a multitask method");
  }
}

std::vector<double> default_rho1_grid() {
  auto g = power_grid();
  for (int v = 200; v <= 500; v += 50) g.push_back(v);
  return g;
}

std::vector<double> default_rho2_grid() {
  auto g = power_grid();
  for (int v = 200; v <= 1000; v += 50) g.push_back(v);
  return g;
}

void Grid::validate() const {
  auto check = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) throw std::invalid_argument(std::string("grid ") + name + " is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0) || !std::isfinite(v[i]))
        throw std::invalid_argument(std::string("grid ") + name + " must be positive and finite");
      if (i > 0 && !(v[i] > v[i - 1])) throw std::invalid_argument(std::string("grid ") + name + " must be ascending");
    }
  };
  check(rho1, "rho1");
  check(rho2, "rho2");
  if (lambda_count < 1) throw std::invalid_argument("grid lambda_count must be positive");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
    throw std::invalid_argument("grid lambda_min_ratio must lie in (0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("grid alpha must lie in [0, 1]");
  for (Index k : pls_components)
    if (k < 1) throw std::invalid_argument("grid PLS component counts must be positive");
}

std::string entry_label(const EvalEntry& entry) {
  if (entry.harmonization.empty() || entry.harmonization == "none") return entry.method;
  return entry.harmonization + "_" + entry.method;
}

Matrix cross_validated_predictions(const Cohort& cohort, const MethodSpec& spec, const std::string& horizon,
                                   const CvOptions& opts, std::vector<std::string>* selections) {
  if (opts.repeats < 1) throw std::invalid_argument("nested_cv: repeats must be positive");
  if (opts.outer_folds < 2) throw std::invalid_argument("nested_cv: outer_folds must be at least 2");
  if (opts.pipeline.inner_folds < 2) throw std::invalid_argument("nested_cv: inner_folds must be at least 2");
  opts.pipeline.grid.validate();

  const Horizon& h = cohort.horizon(horizon);
  const Vector y = target_vector(h);
  const IndexSet usable = h.observed();
  const TaskPartition partition = partition_tasks(cohort, spec.partition);

  const auto repeats = static_cast<std::size_t>(opts.repeats);
  const auto folds = static_cast<std::size_t>(opts.outer_folds);
  std::vector<std::vector<IndexSet>> plan(repeats);
  for (std::size_t r = 0; r < repeats; ++r)
    plan[r] = stratified_folds(usable, select_rows(y, usable), opts.outer_folds,
                               derive_seed(opts.seed, {kOuterFoldStream, r}));

  PipelineOptions pipeline = opts.pipeline;
  if (opts.harmonize_global) pipeline.harmonize_rows = usable;

  Matrix predictions = Matrix::Constant(cohort.size(), opts.repeats, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> chosen(repeats * folds);

  // Work items are independent; each writes only its own slots, so the result
  // does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t item = next.fetch_add(1);
      if (item >= repeats * folds) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const std::size_t r = item / folds;
      const std::size_t f = item % folds;
      try {
        const IndexSet& test = plan[r][f];
        const IndexSet train = complement(usable, test);
        const SplitResult res =
            run_split(cohort, y, partition, spec, pipeline, train, test, derive_seed(opts.seed, {kSplitStream, r, f}));
        for (std::size_t i = 0; i < test.size(); ++i)
          predictions(test[i], static_cast<Index>(r)) = res.predictions(static_cast<Index>(i));
        chosen[item] = res.selection;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(repeats * folds)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  if (selections) *selections = std::move(chosen);
  return predictions;
}

std::vector<GroupResult> summarize_groups(const Cohort& cohort, const Vector& target, const Matrix& predictions,
                                          const CvOptions& opts) {
  std::vector<std::string> groups = cohort.group_levels();
  groups.emplace_back("ALL");
  std::vector<GroupResult> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    GroupResult res;
    res.group = groups[g];
    IndexSet rows;
    for (Index i = 0; i < cohort.size(); ++i) {
      if (!std::isfinite(target(i))) continue;
      if (res.group == "ALL" || cohort.group[static_cast<std::size_t>(i)] == res.group) rows.push_back(i);
    }
    res.n = static_cast<Index>(rows.size());
    res.low_n = res.n < kLowNThreshold;
    const Vector y = select_rows(target, rows);
    const Matrix p = select_rows(predictions, rows);
    for (Metric metric : {Metric::PearsonR, Metric::MAE}) {
      MetricSummary& s = metric == Metric::PearsonR ? res.r : res.mae;
      if (rows.empty()) {
        s.per_repeat.assign(static_cast<std::size_t>(predictions.cols()), std::nullopt);
        continue;
      }
      for (Index r = 0; r < p.cols(); ++r) s.per_repeat.push_back(try_metric(metric, y, p.col(r)));
      s.mean = repeated_metric(y, p, metric);
      if (!s.mean || rows.size() < 10) continue;
      try {
        const Interval ci = bootstrap_ci_repeated(
            y, p, metric, opts.bootstrap_resamples, opts.ci_level,
            derive_seed(opts.seed, {kBootstrapStream, g, static_cast<std::uint64_t>(metric)}));
        s.ci_lo = ci.lo;
        s.ci_hi = ci.hi;
      } catch (const UndefinedMetric&) {
      }
    }
    out.push_back(std::move(res));
  }
  return out;
}

EvalEntry nested_cv(const Cohort& cohort, const MethodSpec& spec, const std::string& horizon, const CvOptions& opts) {
  EvalEntry entry;
  entry.method = std::string(to_string(spec.method));
  entry.harmonization = std::string(to_string(spec.harmonization));
  entry.partition = std::string(to_string(spec.partition));
  entry.horizon = horizon;
  entry.warnings = partition_tasks(cohort, spec.partition).warnings;

  const Matrix predictions = cross_validated_predictions(cohort, spec, horizon, opts, &entry.selections);
  const Vector y = target_vector(cohort.horizon(horizon));
  entry.groups = summarize_groups(cohort, y, predictions, opts);
  for (const auto& g : entry.groups) {
    if (g.low_n && g.n > 0)
      entry.warnings.push_back("group " + g.group + " has N=" + std::to_string(g.n) + " (< " +
                               std::to_string(kLowNThreshold) + "); metrics are unreliable");
  }
  return entry;
}

}  // namespace cogmtl

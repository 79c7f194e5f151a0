#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "cogmtl/errors.hpp"
#include "cogmtl/eval.hpp"
#include "cogmtl/harmonize.hpp"
#include "cogmtl/random.hpp"
#include "cogmtl/csv.hpp"

namespace cogmtl {

namespace {

constexpr std::uint64_t kInnerFoldStream = 1;
constexpr std::uint64_t kStackingStream = 2;

std::vector<std::string> pick(const std::vector<std::string>& v, const IndexSet& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

std::vector<double> pick(const std::vector<double>& v, const IndexSet& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

double mean_of(const Vector& y, const IndexSet& rows) {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (Index r : rows) s += y(r);
  return s / static_cast<double>(rows.size());
}

std::string fmt(double v) { return csv::format(v); }

void scatter(Vector& out, const IndexSet& out_rows, const IndexSet& rows, const Vector& values) {
  // Both index lists are subsets in the same relative order.
  std::size_t j = 0;
  for (std::size_t i = 0; i < out_rows.size() && j < rows.size(); ++i) {
    if (out_rows[i] == rows[j]) out(static_cast<Index>(i)) = values(static_cast<Index>(j++));
  }
}

/// A downstream learner exposing a finite, ordered candidate set. Candidate 0
/// is the most strongly regularized; later candidates are weaker.
class Family {
 public:
  virtual ~Family() = default;
  [[nodiscard]] virtual Index candidates() const = 0;
  /// Predictions on `val` (rows) for every candidate (columns).
  [[nodiscard]] virtual Matrix evaluate(const Matrix& f, const IndexSet& fit, const IndexSet& val) const = 0;
  [[nodiscard]] virtual Vector fit_predict(const Matrix& f, const IndexSet& fit, const IndexSet& pred, Index c) const = 0;
  [[nodiscard]] virtual std::string describe(Index c) const = 0;
  [[nodiscard]] virtual bool root_criterion() const { return false; }
};

class ElasticNetFamily final : public Family {
 public:
  ElasticNetFamily(const Vector& y, std::vector<double> lambdas, double alpha, SolveOptions solve)
      : y_(y), lambdas_(std::move(lambdas)), alpha_(alpha), solve_(solve) {}

  [[nodiscard]] Index candidates() const override { return static_cast<Index>(lambdas_.size()); }

  [[nodiscard]] Matrix evaluate(const Matrix& f, const IndexSet& fit, const IndexSet& val) const override {
    const auto path = fit_elastic_net_path(select_rows(f, fit), select_rows(y_, fit), lambdas_, alpha_, solve_);
    const Matrix xv = select_rows(f, val);
    Matrix out(static_cast<Index>(val.size()), candidates());
    for (Index c = 0; c < candidates(); ++c) out.col(c) = predict(path[static_cast<std::size_t>(c)], xv);
    return out;
  }

  [[nodiscard]] Vector fit_predict(const Matrix& f, const IndexSet& fit, const IndexSet& pred, Index c) const override {
    return predict(fit_model(f, fit, c), select_rows(f, pred));
  }

  [[nodiscard]] ElasticNetModel fit_model(const Matrix& f, const IndexSet& fit, Index c) const {
    // Warm-start down the path to the chosen value for the same solution the
    // inner loop scored.
    const std::vector<double> prefix(lambdas_.begin(), lambdas_.begin() + c + 1);
    return fit_elastic_net_path(select_rows(f, fit), select_rows(y_, fit), prefix, alpha_, solve_).back();
  }

  [[nodiscard]] std::string describe(Index c) const override {
    return "lambda=" + fmt(lambdas_[static_cast<std::size_t>(c)]);
  }
  [[nodiscard]] double lambda(Index c) const { return lambdas_[static_cast<std::size_t>(c)]; }

 private:
  const Vector& y_;
  std::vector<double> lambdas_;
  double alpha_;
  SolveOptions solve_;
};

/// Rows grouped by task, restricted to tasks that have at least one row.
struct TaskRows {
  std::vector<Index> tasks;  // partition task ids present
  std::vector<IndexSet> rows;
};

TaskRows group_by_task(const TaskPartition& partition, const IndexSet& rows) {
  TaskRows out;
  for (Index t = 0; t < partition.task_count(); ++t) {
    IndexSet m = partition.members(t, rows);
    if (m.empty()) continue;
    out.tasks.push_back(t);
    out.rows.push_back(std::move(m));
  }
  return out;
}

class MultiTaskFamily final : public Family {
 public:
  MultiTaskFamily(const Vector& y, const TaskPartition& partition, MtlPenalty penalty, std::vector<double> rho1,
                  std::vector<double> rho2, SolveOptions solve)
      : y_(y), partition_(partition), penalty_(penalty), rho1_(std::move(rho1)), rho2_(std::move(rho2)), solve_(solve) {
    std::sort(rho1_.rbegin(), rho1_.rend());
    std::sort(rho2_.rbegin(), rho2_.rend());
    if (penalty_ == MtlPenalty::TraceNorm) rho2_ = {0.0};
  }

  [[nodiscard]] Index candidates() const override { return static_cast<Index>(rho1_.size() * rho2_.size()); }
  [[nodiscard]] bool root_criterion() const override { return true; }

  [[nodiscard]] Matrix evaluate(const Matrix& f, const IndexSet& fit, const IndexSet& val) const override {
    const TaskRows groups = group_by_task(partition_, fit);
    const MultiTaskData data = make_data(f, groups);
    Matrix out(static_cast<Index>(val.size()), candidates());
    for (std::size_t j2 = 0; j2 < rho2_.size(); ++j2) {
      Matrix warm;
      for (std::size_t j1 = 0; j1 < rho1_.size(); ++j1) {
        const MultiTaskModel model =
            fista_solve(data, penalty_, rho1_[j1], rho2_[j2], solve_, warm.size() > 0 ? &warm : nullptr);
        warm = model.w;
        out.col(index(j1, j2)) = predict_rows(model, groups, f, fit, val);
      }
    }
    return out;
  }

  [[nodiscard]] Vector fit_predict(const Matrix& f, const IndexSet& fit, const IndexSet& pred, Index c) const override {
    const TaskRows groups = group_by_task(partition_, fit);
    return predict_rows(fit_model(f, groups, c), groups, f, fit, pred);
  }

  [[nodiscard]] MultiTaskModel fit_model(const Matrix& f, const TaskRows& groups, Index c) const {
    const auto [j1, j2] = split(c);
    return fista_solve(make_data(f, groups), penalty_, rho1_[j1], rho2_[j2], solve_);
  }

  [[nodiscard]] std::string describe(Index c) const override {
    const auto [j1, j2] = split(c);
    if (penalty_ == MtlPenalty::TraceNorm) return "rho1=" + fmt(rho1_[j1]);
    return "rho1=" + fmt(rho1_[j1]) + ",rho2=" + fmt(rho2_[j2]);
  }
  [[nodiscard]] std::pair<double, double> rho(Index c) const {
    const auto [j1, j2] = split(c);
    return {rho1_[j1], rho2_[j2]};
  }

 private:
  // Larger rho1 first, then larger rho2: ties resolve toward the stronger penalty.
  [[nodiscard]] Index index(std::size_t j1, std::size_t j2) const {
    return static_cast<Index>(j1 * rho2_.size() + j2);
  }
  [[nodiscard]] std::pair<std::size_t, std::size_t> split(Index c) const {
    const auto u = static_cast<std::size_t>(c);
    return {u / rho2_.size(), u % rho2_.size()};
  }

  [[nodiscard]] MultiTaskData make_data(const Matrix& f, const TaskRows& groups) const {
    MultiTaskData data;
    for (const auto& rows : groups.rows) {
      data.x.push_back(select_rows(f, rows));
      data.y.push_back(select_rows(y_, rows));
    }
    return data;
  }

  [[nodiscard]] Vector predict_rows(const MultiTaskModel& model, const TaskRows& groups, const Matrix& f,
                                    const IndexSet& fit, const IndexSet& rows) const {
    const double fallback = mean_of(y_, fit);
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Index task = partition_.task_of[static_cast<std::size_t>(rows[i])];
      const auto it = std::find(groups.tasks.begin(), groups.tasks.end(), task);
      if (it == groups.tasks.end()) {
        out(static_cast<Index>(i)) = fallback;
      } else {
        const auto col = static_cast<Index>(it - groups.tasks.begin());
        out(static_cast<Index>(i)) = f.row(rows[i]).dot(model.w.col(col)) + model.biases(col);
      }
    }
    return out;
  }

  const Vector& y_;
  const TaskPartition& partition_;
  MtlPenalty penalty_;
  std::vector<double> rho1_;
  std::vector<double> rho2_;
  SolveOptions solve_;
};

/// Blockwise kernel-ridge stacking, either pooled or one stacked model per task.
class StackedFamily final : public Family {
 public:
  StackedFamily(const Vector& y, const TaskPartition* per_task, RegionBlocks blocks, StackingOptions opts)
      : y_(y), per_task_(per_task), blocks_(std::move(blocks)), opts_(opts) {}

  [[nodiscard]] Index candidates() const override { return 1; }

  [[nodiscard]] Matrix evaluate(const Matrix& f, const IndexSet& fit, const IndexSet& val) const override {
    return fit_predict(f, fit, val, 0);
  }

  [[nodiscard]] Vector fit_predict(const Matrix& f, const IndexSet& fit, const IndexSet& pred, Index) const override {
    if (per_task_ == nullptr) return fit_one(f, fit, pred);
    Vector out(static_cast<Index>(pred.size()));
    const double fallback = mean_of(y_, fit);
    for (Index t = 0; t < per_task_->task_count(); ++t) {
      const IndexSet target_rows = per_task_->members(t, pred);
      if (target_rows.empty()) continue;
      const IndexSet train_rows = per_task_->members(t, fit);
      const Vector p = train_rows.empty() ? Vector::Constant(static_cast<Index>(target_rows.size()), fallback)
                                          : fit_one(f, train_rows, target_rows);
      scatter(out, pred, target_rows, p);
    }
    return out;
  }

  [[nodiscard]] std::string describe(Index) const override { return "stacked"; }

 private:
  [[nodiscard]] Vector fit_one(const Matrix& f, const IndexSet& fit, const IndexSet& pred) const {
    const auto needed = static_cast<std::size_t>(std::max(5, opts_.internal_folds));
    if (fit.size() < needed) return Vector::Constant(static_cast<Index>(pred.size()), mean_of(y_, fit));
    const StackedModel model = fit_stacked(select_rows(f, fit), select_rows(y_, fit), blocks_, opts_);
    return model.predict(select_rows(f, pred));
  }

  const Vector& y_;
  const TaskPartition* per_task_;
  RegionBlocks blocks_;
  StackingOptions opts_;
};

/// Scores per candidate, accumulated over inner folds.
class ScoreBoard {
 public:
  explicit ScoreBoard(Index candidates) : total_(Vector::Zero(candidates)) {}

  void add(const Vector& y_val, const Matrix& predictions, bool root) {
    for (Index c = 0; c < predictions.cols(); ++c) {
      double s = (predictions.col(c) - y_val).squaredNorm() / static_cast<double>(y_val.size());
      if (root) s = std::sqrt(s);
      total_(c) += std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
    }
  }
  [[nodiscard]] const Vector& total() const { return total_; }

 private:
  Vector total_;
};

/// First index of the minimum; later candidates must improve by a relative
/// margin so near-ties resolve toward the earlier, more regularized one.
Index argmin_first(const Vector& scores) {
  Index best = 0;
  for (Index c = 1; c < scores.size(); ++c)
    if (scores(c) < scores(best) - 1e-12 * std::abs(scores(best))) best = c;
  return best;
}

std::vector<IndexSet> inner_folds(const Vector& y, const IndexSet& rows, int k, std::uint64_t seed) {
  const int folds = std::min<int>(k, static_cast<int>(rows.size()));
  return stratified_folds(rows, select_rows(y, rows), folds, seed);
}

struct Selected {
  Index candidate = 0;
  Index components = 0;  // PLS only
};

/// Inner CV over the candidates of `family` on features `f`.
Index select_candidate(const Family& family, const Matrix& f, const Vector& y, const IndexSet& rows, int k,
                       std::uint64_t seed) {
  if (family.candidates() == 1) return 0;
  ScoreBoard board(family.candidates());
  for (const IndexSet& val : inner_folds(y, rows, k, seed)) {
    const IndexSet fit = complement(rows, val);
    board.add(select_rows(y, val), family.evaluate(f, fit, val), family.root_criterion());
  }
  return argmin_first(board.total());
}

std::vector<double> en_lambdas(const Matrix& f, const Vector& y, const IndexSet& rows, const Grid& grid) {
  return lambda_path(elastic_net_lambda_max(select_rows(f, rows), select_rows(y, rows), grid.alpha), grid.lambda_count,
                     grid.lambda_min_ratio);
}

struct PlsContext {
  const Cohort& cohort;
  const Matrix& z;  // standardized features, all rows
  const RegionBlocks& blocks;
  bool with_age;
};

Matrix adapt(const PlsContext& ctx, const IndexSet& fit, Index k) {
  const Matrix x = select_rows(ctx.z, fit);
  const auto batch = pick(ctx.cohort.batch, fit);
  const auto age = pick(ctx.cohort.age, fit);
  const DomainAdapter adapter = fit_domain_adapter(x, batch, ctx.with_age ? &age : nullptr, ctx.blocks, k);
  return adapter.apply(ctx.z);
}

/// Joint inner CV over (K, downstream candidate).
Selected select_with_pls(const Family& family, const PlsContext& ctx, const Vector& y, const IndexSet& rows,
                         const std::vector<Index>& ks, int k, std::uint64_t seed) {
  if (ks.empty()) throw ConfigError("PLS harmonization needs at least one component candidate");
  const auto folds = inner_folds(y, rows, k, seed);
  const Index c = family.candidates();
  Vector scores(static_cast<Index>(ks.size()) * c);
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    ScoreBoard board(c);
    for (const IndexSet& val : folds) {
      const IndexSet fit = complement(rows, val);
      board.add(select_rows(y, val), family.evaluate(adapt(ctx, fit, ks[ki]), fit, val), family.root_criterion());
    }
    scores.segment(static_cast<Index>(ki) * c, c) = board.total();
  }
  const Index best = argmin_first(scores);
  return {best % c, ks[static_cast<std::size_t>(best / c)]};
}

bool is_pls(Harmonization h) { return h == Harmonization::PLS || h == Harmonization::PLSAge; }

}  // namespace

RegionBlocks default_blocks(Index feature_count) {
  const Index count = std::max<Index>(2, (feature_count + 9) / 10);
  return contiguous_blocks(feature_count, std::min(count, feature_count));
}

Matrix harmonize_features(const Cohort& cohort, Harmonization harmonization, const IndexSet& fit_rows) {
  switch (harmonization) {
    case Harmonization::None:
    case Harmonization::PLS:
    case Harmonization::PLSAge:
      return cohort.features;
    case Harmonization::ComBat:
    case Harmonization::ComBatAge:
    case Harmonization::ComBatRegAge: {
      const bool age = harmonization != Harmonization::ComBat;
      const Matrix cov = age ? covariate_column(cohort.age) : Matrix(cohort.size(), 0);
      const CombatParams params =
          combat_fit(select_rows(cohort.features, fit_rows), pick(cohort.batch, fit_rows), select_rows(cov, fit_rows));
      Matrix out = combat_apply(cohort.features, cohort.batch, cov, params);
      if (harmonization == Harmonization::ComBatRegAge) out = residualize(out, cov, fit_rows);
      return out;
    }
  }
  throw std::logic_error("unhandled harmonization");
}

SplitResult run_split(const Cohort& cohort, const Vector& target, const TaskPartition& partition,
                      const MethodSpec& spec, const PipelineOptions& opts, const IndexSet& train, const IndexSet& test,
                      std::uint64_t seed) {
  if (target.size() != cohort.size()) throw std::invalid_argument("run_split: target length mismatch");
  if (train.size() < 2) throw DataError("run_split: fewer than 2 training subjects");
  for (Index r : train)
    if (!std::isfinite(target(r))) throw std::invalid_argument("run_split: training row with missing target");
  opts.grid.validate();

  const IndexSet& harmonize_rows = opts.harmonize_rows.empty() ? train : opts.harmonize_rows;
  const Matrix base = harmonize_features(cohort, spec.harmonization, harmonize_rows);
  const Matrix z = fit_standardizer(base, train).apply(base);
  const std::uint64_t fold_seed = derive_seed(seed, {kInnerFoldStream});

  SplitResult result;
  result.predictions.resize(static_cast<Index>(test.size()));
  const int k = opts.inner_folds;

  if (is_pls(spec.harmonization)) {
    const RegionBlocks blocks = opts.blocks ? *opts.blocks : default_blocks(cohort.feature_count());
    blocks.validate(cohort.feature_count());
    const PlsContext ctx{cohort, z, blocks, spec.harmonization == Harmonization::PLSAge};
    std::unique_ptr<Family> family;
    if (is_multitask(spec.method)) {
      family = std::make_unique<MultiTaskFamily>(target, partition, penalty_of(spec.method), opts.grid.rho1,
                                                 opts.grid.rho2, opts.solve);
    } else {
      StackingOptions so = opts.stacking;
      so.seed = derive_seed(seed, {kStackingStream});
      family = std::make_unique<StackedFamily>(target, spec.method == Method::SepEN ? &partition : nullptr, blocks, so);
    }
    const Selected sel = select_with_pls(*family, ctx, target, train, opts.grid.pls_components, k, fold_seed);
    const Matrix f = adapt(ctx, train, sel.components);
    result.predictions = family->fit_predict(f, train, test, sel.candidate);
    result.selection = "K=" + std::to_string(sel.components) + "," + family->describe(sel.candidate);
    return result;
  }

  if (is_multitask(spec.method)) {
    const MultiTaskFamily family(target, partition, penalty_of(spec.method), opts.grid.rho1, opts.grid.rho2,
                                 opts.solve);
    const Index c = select_candidate(family, z, target, train, k, fold_seed);
    result.predictions = family.fit_predict(z, train, test, c);
    result.selection = family.describe(c);
    return result;
  }

  if (spec.method == Method::AllEN) {
    const ElasticNetFamily family(target, en_lambdas(z, target, train, opts.grid), opts.grid.alpha, opts.solve);
    const Index c = select_candidate(family, z, target, train, k, fold_seed);
    result.predictions = family.fit_predict(z, train, test, c);
    result.selection = family.describe(c);
    return result;
  }

  // SEP-EN: an independent model per task, each with its own path and inner CV.
  const double fallback = mean_of(target, train);
  for (Index t = 0; t < partition.task_count(); ++t) {
    const IndexSet pred_rows = partition.members(t, test);
    const IndexSet fit_rows = partition.members(t, train);
    if (!result.selection.empty()) result.selection += ';';
    result.selection += partition.task_names[static_cast<std::size_t>(t)] + ":";
    if (fit_rows.size() < 3) {
      const double m = fit_rows.empty() ? fallback : mean_of(target, fit_rows);
      scatter(result.predictions, test, pred_rows, Vector::Constant(static_cast<Index>(pred_rows.size()), m));
      result.selection += "mean";
      continue;
    }
    const ElasticNetFamily family(target, en_lambdas(z, target, fit_rows, opts.grid), opts.grid.alpha, opts.solve);
    const Index c = select_candidate(family, z, target, fit_rows, k, derive_seed(fold_seed, {static_cast<std::uint64_t>(t)}));
    if (!pred_rows.empty()) scatter(result.predictions, test, pred_rows, family.fit_predict(z, fit_rows, pred_rows, c));
    result.selection += family.describe(c);
  }
  return result;
}

Index LinearModel::task_index(const std::string& name) const {
  const auto it = std::find(task_names.begin(), task_names.end(), name);
  if (it == task_names.end()) throw DataError("model has no task '" + name + "'");
  return static_cast<Index>(it - task_names.begin());
}

namespace {

std::optional<double> fixed_value(const std::vector<std::pair<std::string, double>>& fixed, const std::string& key) {
  for (const auto& [k, v] : fixed)
    if (k == key) return v;
  return std::nullopt;
}

}  // namespace

LinearModel fit_linear_model(const Cohort& cohort, const MethodSpec& spec, const std::string& horizon,
                             const PipelineOptions& opts, std::uint64_t seed,
                             const std::vector<std::pair<std::string, double>>& fixed) {
  if (spec.harmonization != Harmonization::None)
    throw ConfigError("linear models are fitted on features as given; run harmonize first and set harmonization = none");
  opts.grid.validate();
  const Vector y = target_vector(cohort.horizon(horizon));
  const IndexSet rows = cohort.horizon(horizon).observed();
  if (rows.size() < 3) throw DataError("fit: fewer than 3 subjects with an observed target");

  LinearModel model;
  model.method = spec.method;
  model.standardizer = fit_standardizer(cohort.features, rows);
  const Matrix z = model.standardizer.apply(cohort.features);
  const std::uint64_t fold_seed = derive_seed(seed, {kInnerFoldStream});
  const Index m = cohort.feature_count();

  auto lambda_family = [&](const IndexSet& fit_rows) {
    std::vector<double> lambdas;
    if (auto v = fixed_value(fixed, "lambda"))
      lambdas = {*v};
    else
      lambdas = en_lambdas(z, y, fit_rows, opts.grid);
    return ElasticNetFamily(y, std::move(lambdas), opts.grid.alpha, opts.solve);
  };

  if (spec.method == Method::AllEN) {
    model.partition = PartitionScheme::Pooled;
    model.task_names = {"ALL"};
    const ElasticNetFamily family = lambda_family(rows);
    const Index c = select_candidate(family, z, y, rows, opts.inner_folds, fold_seed);
    const ElasticNetModel en = family.fit_model(z, rows, c);
    model.weights = en.coef;
    model.biases = Vector::Constant(1, en.intercept);
    model.hyperparameters = {{"lambda", family.lambda(c)}, {"alpha", opts.grid.alpha}};
    return model;
  }

  const TaskPartition partition = partition_tasks(cohort, spec.partition);
  model.partition = spec.partition;
  model.task_names = partition.task_names;
  model.weights = Matrix::Zero(m, partition.task_count());
  model.biases = Vector::Constant(partition.task_count(), mean_of(y, rows));

  if (spec.method == Method::SepEN) {
    model.hyperparameters.emplace_back("alpha", opts.grid.alpha);
    for (Index t = 0; t < partition.task_count(); ++t) {
      const IndexSet fit_rows = partition.members(t, rows);
      const std::string& name = partition.task_names[static_cast<std::size_t>(t)];
      if (fit_rows.size() < 3) {
        if (!fit_rows.empty()) model.biases(t) = mean_of(y, fit_rows);
        continue;
      }
      const ElasticNetFamily family = lambda_family(fit_rows);
      const Index c = select_candidate(family, z, y, fit_rows, opts.inner_folds,
                                       derive_seed(fold_seed, {static_cast<std::uint64_t>(t)}));
      const ElasticNetModel en = family.fit_model(z, fit_rows, c);
      model.weights.col(t) = en.coef;
      model.biases(t) = en.intercept;
      model.hyperparameters.emplace_back("lambda:" + name, family.lambda(c));
    }
    return model;
  }

  std::vector<double> rho1 = opts.grid.rho1;
  std::vector<double> rho2 = opts.grid.rho2;
  if (auto v = fixed_value(fixed, "rho1")) rho1 = {*v};
  if (auto v = fixed_value(fixed, "rho2")) rho2 = {*v};
  const MultiTaskFamily family(y, partition, penalty_of(spec.method), rho1, rho2, opts.solve);
  const Index c = select_candidate(family, z, y, rows, opts.inner_folds, fold_seed);
  const TaskRows groups = group_by_task(partition, rows);
  const MultiTaskModel mt = family.fit_model(z, groups, c);
  for (std::size_t j = 0; j < groups.tasks.size(); ++j) {
    model.weights.col(groups.tasks[j]) = mt.w.col(static_cast<Index>(j));
    model.biases(groups.tasks[j]) = mt.biases(static_cast<Index>(j));
  }
  const auto [r1, r2] = family.rho(c);
  model.hyperparameters = {{"rho1", r1}};
  if (spec.method != Method::TraceNorm) model.hyperparameters.emplace_back("rho2", r2);
  return model;
}

Vector predict(const LinearModel& model, const Cohort& cohort) {
  if (cohort.feature_count() != model.weights.rows())
    throw DataError("model expects " + std::to_string(model.weights.rows()) + " features, cohort has " +
                    std::to_string(cohort.feature_count()));
  const Matrix z = model.standardizer.apply(cohort.features);
  Vector out(cohort.size());
  for (Index i = 0; i < cohort.size(); ++i) {
    const auto& g = cohort.group[static_cast<std::size_t>(i)];
    const auto& b = cohort.batch[static_cast<std::size_t>(i)];
    const Index t = model.task_index(task_name(model.partition, g, b));
    out(i) = z.row(i).dot(model.weights.col(t)) + model.biases(t);
  }
  return out;
}

}  // namespace cogmtl

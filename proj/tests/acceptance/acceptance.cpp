// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <Eigen/SVD>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <cogmtl/csv.hpp>
#include <cogmtl/eval.hpp>
#include <cogmtl/harmonize.hpp>
#include <cogmtl/pls.hpp>
#include <cogmtl/prox.hpp>
#include <cogmtl/random.hpp>
#include <cogmtl/serialize.hpp>
#include <cogmtl/solvers.hpp>
#include <cogmtl/synth.hpp>

using namespace cogmtl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Matrix gaussian(Rng& rng, Index r, Index c, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

// ---------------------------------------------------------------------------
// 1. Prox operators against a derivative-free minimizer
// ---------------------------------------------------------------------------

// Penalties written out independently of the library.
double reference_penalty(ProxKind kind, const Matrix& w) {
  switch (kind) {
    case ProxKind::L1: return w.cwiseAbs().sum();
    case ProxKind::GroupL21Rows: {
      double s = 0.0;
      for (Index r = 0; r < w.rows(); ++r) s += w.row(r).norm();
      return s;
    }
    case ProxKind::LInfRows: {
      double s = 0.0;
      for (Index r = 0; r < w.rows(); ++r) s += w.row(r).cwiseAbs().maxCoeff();
      return s;
    }
    case ProxKind::Nuclear: return Eigen::JacobiSVD<Matrix>(w).singularValues().sum();
  }
  return 0.0;
}

template <class F>
double golden_line(F&& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 80; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Line searches along coordinates, the radial direction and random directions.
Matrix numeric_prox(ProxKind kind, const Matrix& v, double t, Rng& rng) {
  auto objective = [&](const Matrix& x) { return 0.5 * (x - v).squaredNorm() + t * reference_penalty(kind, x); };
  Matrix x = v;
  const double reach = 2.0 * (v.cwiseAbs().maxCoeff() + t);
  auto search = [&](const Matrix& dir) {
    const double step = golden_line([&](double a) { return objective(x + a * dir); }, -reach, reach);
    const Matrix cand = x + step * dir;
    if (objective(cand) < objective(x)) x = cand;
  };
  for (int sweep = 0; sweep < 60; ++sweep) {
    for (Index i = 0; i < x.size(); ++i) {
      Matrix e = Matrix::Zero(x.rows(), x.cols());
      e(i) = 1.0;
      search(e);
    }
    if (x.norm() > 0) search(x / x.norm());
    for (Index r = 0; r < x.rows(); ++r) {
      Matrix e = Matrix::Zero(x.rows(), x.cols());
      e.row(r) = x.row(r).norm() > 0 ? Matrix(x.row(r) / x.row(r).norm()) : Matrix(v.row(r) / std::max(v.row(r).norm(), 1e-300));
      search(e);
    }
    for (int k = 0; k < 4; ++k) {
      Matrix dir = gaussian(rng, x.rows(), x.cols());
      search(dir / dir.norm());
    }
  }
  return x;
}

Outcome criterion_prox() {
  Rng rng(derive_seed(1, {1}));
  double worst_gap = -1e300;
  double worst_numeric_excess = 0.0;
  int failures = 0;
  for (ProxKind kind : {ProxKind::L1, ProxKind::GroupL21Rows, ProxKind::LInfRows, ProxKind::Nuclear}) {
    for (int inst = 0; inst < 100; ++inst) {
      const Index rows = 1 + inst % 4;
      const Index cols = 1 + (inst / 4) % 3;
      const Matrix v = gaussian(rng, rows, cols, uniform(rng, 0.2, 3.0));
      const double t = log_uniform(rng, 0.05, 3.0);
      const Matrix p = apply_prox({kind, t}, v);
      const Matrix q = numeric_prox(kind, v, t, rng);
      const double fp = 0.5 * (p - v).squaredNorm() + t * reference_penalty(kind, p);
      const double fq = 0.5 * (q - v).squaredNorm() + t * reference_penalty(kind, q);
      worst_gap = std::max(worst_gap, fp - fq);
      worst_numeric_excess = std::max(worst_numeric_excess, fq - fp);
      if (fp > fq + 1e-5) ++failures;
    }
  }
  return {failures == 0, "400 instances, max f(prox) - f(numeric) = " + fmt(worst_gap) +
                             ", numeric minimizer within " + fmt(worst_numeric_excess) + " of prox"};
}

// ---------------------------------------------------------------------------
// 2. Solver optimality against the lattice oracle
// ---------------------------------------------------------------------------

MultiTaskData random_tasks(Rng& rng, Index m, Index s) {
  MultiTaskData d;
  for (Index t = 0; t < s; ++t) {
    const Index n = 15 + static_cast<Index>(uniform(rng, 0, 15));
    Matrix x = gaussian(rng, n, m);
    Vector w(m);
    for (Index j = 0; j < m; ++j) w(j) = uniform(rng, -2.0, 2.0);
    d.x.push_back(x);
    d.y.push_back(x * w + gaussian(rng, n, 1, 0.5).col(0) + Vector::Constant(n, uniform(rng, -1, 1)));
  }
  return d;
}

Outcome criterion_solver_optimality() {
  Rng rng(derive_seed(1, {2}));
  const std::pair<Index, Index> shapes[] = {{2, 1}, {3, 1}, {1, 2}, {2, 2}, {4, 1}};
  SolveOptions opts;
  opts.max_iter = 200000;
  opts.rel_tol = 1e-13;
  const GridBox box{-3.0, 3.0, 0.05};
  const double budget = std::pow(121.0, 4.0);
  double worst = -1e300;
  int failures = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto [m, s] = shapes[inst % 5];
    const MultiTaskData d = random_tasks(rng, m, s);
    const double rho1 = log_uniform(rng, 0.01, 1.0);
    const double rho2 = log_uniform(rng, 0.01, 1.0);
    for (MtlPenalty pen : {MtlPenalty::MTLasso, MtlPenalty::JFS, MtlPenalty::Dirty, MtlPenalty::TraceNorm}) {
      const double r2 = pen == MtlPenalty::TraceNorm ? 0.0 : rho2;
      const MultiTaskModel model = fista_solve(d, pen, rho1, r2, opts);
      const BruteForceResult oracle =
          brute_force_penalized_ls(d, PenaltySpec::make_multitask(pen, rho1, r2), box, budget);
      const double gap = mtl_objective(d, model) - oracle.objective;
      worst = std::max(worst, gap);
      if (gap > 1e-4) ++failures;
    }
  }
  return {failures == 0, "200 solves on 50 instances, max solver - lattice objective = " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 3. Gradient check
// ---------------------------------------------------------------------------

Outcome criterion_gradient() {
  Rng rng(derive_seed(1, {3}));
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Index m = 2 + inst % 5;
    const Index s = 1 + inst % 3;
    const MultiTaskData d = random_tasks(rng, m, s);
    const LeastSquaresLoss loss(d, uniform(rng, 0.0, 1.0));
    const Matrix w = gaussian(rng, m, s);
    const Matrix g = loss.gradient(w);
    Matrix fd(m, s);
    const double h = 1e-5;
    for (Index i = 0; i < w.size(); ++i) {
      Matrix wp = w, wm = w;
      wp(i) += h;
      wm(i) -= h;
      fd(i) = (loss.value(wp) - loss.value(wm)) / (2.0 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-12));
  }
  return {worst <= 1e-5, "20 instances, max relative error " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 4. MTLasso separability
// ---------------------------------------------------------------------------

Outcome criterion_separability() {
  Rng rng(derive_seed(1, {4}));
  SolveOptions tight;
  tight.max_iter = 200000;
  tight.rel_tol = 1e-14;
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const Index m = 3 + inst % 6;
    const Index s = 2 + inst % 3;
    const MultiTaskData d = random_tasks(rng, m, s);
    const double rho = log_uniform(rng, 0.01, 0.5);
    const MultiTaskModel mtl = fit_mtl_lasso(d, rho, 0.0, tight);
    for (Index t = 0; t < s; ++t) {
      const auto en = fit_elastic_net(d.x[static_cast<std::size_t>(t)], d.y[static_cast<std::size_t>(t)], rho, 1.0, tight);
      worst = std::max(worst, (mtl.w.col(t) - en.coef).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-5, "20 instances, max coefficient difference " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 5 and 6. Harmonization on a shifted cohort with a planted age slope and signal
// ---------------------------------------------------------------------------

constexpr double kPlantedAgeSlope = 0.05;

struct ShiftedCohort {
  Cohort cohort;
  Vector signal_direction;  // unit, orthogonal to the batch shift direction
};

// Two batches of 200, batch shift 1 sd on every feature. Within each batch the
// non-age part is orthogonalized against age, so the planted slope is the exact
// in-sample within-batch slope. A signal along a direction orthogonal to the
// shift is planted with zero within-batch mean and zero age slope.
ShiftedCohort shifted_cohort() {
  SynthSpec s;
  s.groups = {"NC"};
  s.group_offsets = {0.0};
  s.batches = {"1.5T", "3T"};
  s.subjects_per_cell = 200;
  s.features = 20;
  s.blocks = 2;
  s.shared_support = 4;
  s.task_support = 0;
  s.batch_shift = {0.0, 1.0};
  s.batch_scale = {1.0, 1.0};
  s.age_slope = kPlantedAgeSlope;
  s.horizons = {"M12"};
  s.horizon_scale = {1.0};
  s.missing_rate = {0.0};
  s.seed = 2024;
  const SynthCohort sc = generate(s);
  ShiftedCohort out;
  out.cohort = sc.cohort;
  const Index m = s.features;
  out.signal_direction = Vector::Zero(m);
  for (Index j = 0; j < m; ++j) out.signal_direction(j) = j % 2 ? 1.0 : -1.0;
  out.signal_direction /= out.signal_direction.norm();

  Rng rng(derive_seed(s.seed, {99}));
  const Vector planted = gaussian(rng, out.cohort.size(), 1, 2.0).col(0);
  Matrix noise = sc.truth.clean_features + planted * out.signal_direction.transpose();
  for (const auto& level : out.cohort.batch_levels()) {
    IndexSet rows;
    for (Index i = 0; i < out.cohort.size(); ++i)
      if (out.cohort.batch[static_cast<std::size_t>(i)] == level) rows.push_back(i);
    Vector age(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) age(static_cast<Index>(k)) = out.cohort.age[static_cast<std::size_t>(rows[k])];
    const Vector ac = age.array() - age.mean();
    for (Index j = 0; j < m; ++j) {
      Vector col = select_rows(Vector(noise.col(j)), rows);
      // Remove the age slope, and for the planted signal also its batch mean.
      const double slope = ac.dot(col) / ac.squaredNorm();
      for (std::size_t k = 0; k < rows.size(); ++k) noise(rows[k], j) -= slope * ac(static_cast<Index>(k));
    }
    Vector sig = select_rows(Vector(noise * out.signal_direction), rows);
    const double mean = sig.mean();
    for (std::size_t k = 0; k < rows.size(); ++k)
      noise.row(rows[k]) -= mean * out.signal_direction.transpose();
  }
  for (Index i = 0; i < out.cohort.size(); ++i) {
    const std::size_t b = out.cohort.batch[static_cast<std::size_t>(i)] == "3T" ? 1 : 0;
    out.cohort.features.row(i) = noise.row(i).array() + s.batch_shift[b] +
                                 kPlantedAgeSlope * (out.cohort.age[static_cast<std::size_t>(i)] - s.age_mean);
  }
  out.cohort = make_cohort(std::move(out.cohort));
  return out;
}

// Common within-batch age slope per feature (regression on batch indicators and age).
Vector within_batch_slopes(const Matrix& x, const Cohort& c) {
  const auto levels = c.batch_levels();
  Matrix design = Matrix::Zero(c.size(), static_cast<Index>(levels.size()) + 1);
  for (Index i = 0; i < c.size(); ++i) {
    const auto it = std::find(levels.begin(), levels.end(), c.batch[static_cast<std::size_t>(i)]);
    design(i, it - levels.begin()) = 1.0;
    design(i, design.cols() - 1) = c.age[static_cast<std::size_t>(i)];
  }
  const Matrix coef = design.colPivHouseholderQr().solve(x);
  return coef.row(coef.rows() - 1).transpose();
}

Outcome criterion_combat() {
  const ShiftedCohort sc = shifted_cohort();
  const Cohort& c = sc.cohort;
  const IndexSet rows = all_rows(c.size());
  const double before = batch_t_diagnostic(c.features, c.batch, rows).max_abs();
  const Matrix none(c.size(), 0);
  const Matrix harmonized = combat_apply(c.features, c.batch, none, combat_fit(c.features, c.batch, none));
  const double after = batch_t_diagnostic(harmonized, c.batch, rows).max_abs();

  const Matrix age = covariate_column(c.age);
  const Matrix with_age = combat_apply(c.features, c.batch, age, combat_fit(c.features, c.batch, age));
  const Vector slopes = within_batch_slopes(with_age, c);
  const double rel = (slopes.array() - kPlantedAgeSlope).abs().maxCoeff() / kPlantedAgeSlope;
  return {before > 2.0 && after < 2.0 && rel <= 1e-3,
          "max |t| " + fmt(before) + " -> " + fmt(after) + ", covariate-mode age slope max relative error " + fmt(rel)};
}

Outcome criterion_pls() {
  const ShiftedCohort sc = shifted_cohort();
  const Cohort& c = sc.cohort;
  const IndexSet rows = all_rows(c.size());
  const Matrix adapted = domain_adapt(c.features, c.batch, nullptr, 1);
  const double after = batch_t_diagnostic(adapted, c.batch, rows).max_abs();
  auto centered_scores = [&](const Matrix& x) {
    const Vector s = x * sc.signal_direction;
    return Vector(s.array() - s.mean());
  };
  const Vector before_scores = centered_scores(c.features);
  const Vector after_scores = centered_scores(adapted);
  const double cosine = before_scores.dot(after_scores) / (before_scores.norm() * after_scores.norm());
  return {after < 2.0 && cosine > 0.999, "max |t| after adaptation " + fmt(after) + ", signal cosine " + fmt(cosine, 7)};
}

// ---------------------------------------------------------------------------
// 7 to 9. Cross-validation harness properties
// ---------------------------------------------------------------------------

CvOptions cv_options(std::uint64_t seed, int repeats) {
  CvOptions o;
  o.repeats = repeats;
  o.outer_folds = 5;
  o.pipeline.inner_folds = 5;
  o.pipeline.grid.lambda_count = 30;
  o.bootstrap_resamples = 300;
  o.seed = seed;
  return o;
}

const GroupResult& group(const EvalEntry& e, const std::string& name) {
  for (const auto& g : e.groups)
    if (g.group == name) return g;
  throw std::runtime_error("missing group " + name);
}

Outcome criterion_cv_harness() {
  SynthSpec s;
  s.subjects_per_cell = 40;
  s.features = 20;
  s.blocks = 2;
  s.shared_support = 6;
  s.task_support = 0;
  s.task_jitter = 0.0;
  s.noise_sd = 0.0;
  s.group_offsets = {0.0, 0.0, 0.0};
  s.batch_shift = {0.0, 0.0};
  s.age_slope = 0.0;
  s.horizons = {"M12"};
  s.horizon_scale = {1.0};
  s.missing_rate = {0.0};
  s.seed = 7;
  const SynthCohort noiseless = generate(s);
  const MethodSpec all_en{Method::AllEN, Harmonization::None, PartitionScheme::ByGroup};
  const double r_noiseless = *group(nested_cv(noiseless.cohort, all_en, "M12", cv_options(1, 2)), "ALL").r.mean;

  // Null: targets permuted across subjects.
  s.noise_sd = 1.0;
  s.seed = 8;
  SynthCohort null_cohort = generate(s);
  auto& values = null_cohort.cohort.targets[0].values;
  Rng rng(derive_seed(8, {7}));
  std::shuffle(values.begin(), values.end(), rng);
  const EvalEntry null_entry = nested_cv(null_cohort.cohort, all_en, "M12", cv_options(2, 10));
  const double r_null = *group(null_entry, "ALL").r.mean;

  // Byte-identical reports for identical seeds, regardless of worker count.
  CvOptions a = cv_options(3, 2), b = cv_options(3, 2);
  b.jobs = 3;
  const MethodSpec jfs{Method::JFS, Harmonization::ComBat, PartitionScheme::ByGroup};
  EvalReport ra, rb;
  ra.seed = rb.seed = 3;
  ra.entries.push_back(nested_cv(null_cohort.cohort, jfs, "M12", a));
  rb.entries.push_back(nested_cv(null_cohort.cohort, jfs, "M12", b));
  const bool identical = to_json(ra).dump() == to_json(rb).dump();

  return {r_noiseless >= 0.999 && std::abs(r_null) < 0.1 && identical,
          "noiseless R " + fmt(r_noiseless, 6) + ", permuted-target R " + fmt(r_null) +
              ", reports identical: " + (identical ? "yes" : "no")};
}

Outcome criterion_pooled_inflation() {
  SynthSpec s;
  s.subjects_per_cell = 50;
  s.features = 20;
  s.blocks = 2;
  s.shared_support = 0;
  s.task_support = 0;
  s.noise_sd = 1.0;
  s.group_offsets = {0.0, 1.5, 4.0};
  s.batch_shift = {0.0, 0.0};
  s.horizons = {"M12"};
  s.horizon_scale = {1.0};
  s.missing_rate = {0.0};
  s.seed = 11;
  SynthCohort sc = generate(s);
  // Features carry group identity but nothing about the target within a group.
  for (Index i = 0; i < sc.cohort.size(); ++i) {
    const auto& g = sc.cohort.group[static_cast<std::size_t>(i)];
    const double shift = g == "AD" ? 1.0 : g == "MCI" ? 0.5 : 0.0;
    sc.cohort.features.row(i).head(5).array() += shift;
  }
  const EvalEntry e = nested_cv(sc.cohort, {Method::AllEN, Harmonization::None, PartitionScheme::ByGroup}, "M12",
                                cv_options(4, 3));
  const double pooled = *group(e, "ALL").r.mean;
  double best_group = -1.0;
  std::string detail;
  for (const auto& g : e.groups) {
    if (g.group == "ALL") continue;
    const double r = g.r.mean.value_or(-1.0);
    best_group = std::max(best_group, r);
    detail += " " + g.group + "=" + fmt(r, 3);
  }
  return {pooled > best_group, "pooled R " + fmt(pooled, 3) + " vs per-group" + detail};
}

Outcome criterion_mtl_benefit() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthSpec s;
    s.batches = {"1.5T"};
    s.batch_shift = {0.0};
    s.batch_scale = {1.0};
    s.features = 20;
    s.blocks = 2;
    s.shared_support = 5;
    s.task_support = 0;
    s.task_jitter = 0.1;
    s.noise_sd = 0.5;
    s.group_offsets = {0.0, 0.0, 0.0};
    s.cell_sizes = {100, 100, 10 + 300};  // low-N task: 10 = M/2 training subjects, the rest held out
    s.horizons = {"M12"};
    s.horizon_scale = {1.0};
    s.missing_rate = {0.0};
    s.seed = 100 + seed;
    const SynthCohort sc = generate(s);
    const Vector y = target_vector(sc.cohort.horizon("M12"));
    IndexSet train, test;
    for (Index i = 0; i < sc.cohort.size(); ++i) (i < 210 ? train : test).push_back(i);
    PipelineOptions opts = cv_options(seed, 1).pipeline;
    const TaskPartition part = partition_tasks(sc.cohort, PartitionScheme::ByGroup);
    auto held_out_mae = [&](Method m) {
      const MethodSpec spec{m, Harmonization::None, PartitionScheme::ByGroup};
      const SplitResult r = run_split(sc.cohort, y, part, spec, opts, train, test, derive_seed(seed, {9}));
      return mae(select_rows(y, test), r.predictions);
    };
    const double jfs = held_out_mae(Method::JFS);
    const double sep = held_out_mae(Method::SepEN);
    if (jfs <= sep) ++wins;
    detail += " " + fmt(jfs, 3) + "/" + fmt(sep, 3);
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds with JFS <= SEP-EN (JFS/SEP-EN MAE:" + detail + ")"};
}

// ---------------------------------------------------------------------------
// 10. End-to-end CLI smoke run
// ---------------------------------------------------------------------------

int run(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " >> \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

Outcome criterion_end_to_end(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given (--cli)"};
  const fs::path dir = fs::temp_directory_path() / "cogmtl_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  write_file(dir / "simulate.ini",
             "[simulate]\ncell_sizes = 26, 26, 26, 26, 8, 8\nfeatures = 10\nblocks = 2\nshared_support = 3\n"
             "task_support = 1\nhorizons = M12\nhorizon_scale = 1\nmissing_rate = 0\n[run]\nseed = 31\nout = sim\n");
  write_file(dir / "harmonize.ini",
             "[data]\nfeatures = sim/features.csv\ntargets = sim/targets.csv\n[harmonize]\nmethod = ComBat\n"
             "[run]\nseed = 31\nout = harmonized\n");
  write_file(dir / "evaluate.ini",
             "[data]\nfeatures = harmonized/harmonized_features.csv\ntargets = sim/targets.csv\n"
             "[run]\nmethod = SEP-EN, ALL-EN, MTLasso, JFS, Dirty, TraceNorm\nharmonization = none\n"
             "repeats = 2\nouter_folds = 5\ninner_folds = 5\nseed = 31\nout = report\n");

  const auto start = std::chrono::steady_clock::now();
  for (const char* step : {"simulate", "harmonize", "evaluate"}) {
    const int code = run(cli, std::string(step) + " --config \"" + (dir / (std::string(step) + ".ini")).string() + "\"", log);
    if (code != 0) return {false, std::string(step) + " exited with " + std::to_string(code) + " (see " + log.string() + ")"};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const csv::Table table = csv::read(dir / "report" / "table.csv");
  std::vector<std::string> problems;
  for (const char* g : {"NC", "MCI", "AD", "ALL"})
    for (const char* suffix : {"_R", "_R_lo", "_R_hi", "_MAE", "_MAE_lo", "_MAE_hi", "_N", "_lowN"})
      if (table.column(std::string(g) + suffix) < 0) problems.push_back(std::string("missing column ") + g + suffix);
  if (table.rows.size() != 6) problems.push_back("expected 6 rows, found " + std::to_string(table.rows.size()));
  int flagged = 0;
  for (const auto& row : table.rows) {
    auto value = [&](const std::string& col) -> std::optional<double> {
      const int k = table.column(col);
      if (k < 0 || row.cells[static_cast<std::size_t>(k)].empty()) return std::nullopt;
      double v = 0.0;
      if (!csv::parse_double(row.cells[static_cast<std::size_t>(k)], v)) return std::nullopt;
      return v;
    };
    for (const char* g : {"NC", "MCI", "AD", "ALL"}) {
      const std::string p = std::string(row.cells[0]) + " " + g;
      const auto r = value(std::string(g) + "_R");
      const auto m = value(std::string(g) + "_MAE");
      if (r && (*r < -1.0 || *r > 1.0)) problems.push_back(p + " R out of range");
      if (!m || *m < 0.0) problems.push_back(p + " MAE missing or negative");
      for (const char* metric : {"_R", "_MAE"}) {
        const auto point = value(std::string(g) + metric);
        const auto lo = value(std::string(g) + metric + "_lo");
        const auto hi = value(std::string(g) + metric + "_hi");
        if (point && lo && hi && !(*lo <= *point && *point <= *hi)) problems.push_back(p + metric + " CI does not bracket");
      }
      const auto n = value(std::string(g) + "_N");
      const auto low = value(std::string(g) + "_lowN");
      if (!n || !low) {
        problems.push_back(p + " missing N");
        continue;
      }
      if ((*n < 20.0) != (*low == 1.0)) problems.push_back(p + " low-N flag inconsistent");
      if (*low == 1.0) ++flagged;
    }
  }
  if (flagged == 0) problems.push_back("no group carried the low-N flag");
  const bool pass = seconds < 60.0 && problems.empty();
  return {pass, "pipeline " + fmt(seconds, 3) + " s, " + std::to_string(table.rows.size()) + " rows, " +
                    std::to_string(flagged) + " low-N cells" + (problems.empty() ? "" : ", first problem: " + problems.front())};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];

  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0 means no runtime limit
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "prox operators match a numerical minimizer", 10.0, criterion_prox},
      {2, "multitask solvers reach the lattice optimum", 120.0, criterion_solver_optimality},
      {3, "loss gradient matches finite differences", 0.0, criterion_gradient},
      {4, "MTLasso separates into per-task lasso", 0.0, criterion_separability},
      {5, "ComBat removes the batch shift and keeps the age slope", 0.0, criterion_combat},
      {6, "PLS adaptation removes the batch and keeps the signal", 0.0, criterion_pls},
      {7, "CV harness: noiseless fit, permuted null, reproducible", 0.0, criterion_cv_harness},
      {8, "pooled R exceeds every per-group R", 0.0, criterion_pooled_inflation},
      {9, "JFS beats SEP-EN on the low-N task", 0.0, criterion_mtl_benefit},
      {10, "simulate, harmonize and evaluate end to end", 0.0, [&] { return criterion_end_to_end(cli); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0 && seconds >= c.limit_seconds) {
      o.pass = false;
      o.detail += " (exceeded " + fmt(c.limit_seconds) + " s)";
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
              << fmt(seconds, 3) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}

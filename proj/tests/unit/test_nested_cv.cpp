#include <gtest/gtest.h>

#include <cogmtl/errors.hpp>
#include <cogmtl/eval.hpp>
#include <cogmtl/synth.hpp>

#include "support.hpp"

using namespace cogmtl;

namespace {

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.subjects_per_cell = 20;
  s.features = 16;
  s.blocks = 4;
  s.shared_support = 4;
  s.task_support = 2;
  s.horizons = {"M12"};
  s.horizon_scale = {1.0};
  s.missing_rate = {0.1};
  s.seed = seed;
  return s;
}

CvOptions quick_options(std::uint64_t seed) {
  CvOptions o;
  o.repeats = 2;
  o.outer_folds = 4;
  o.pipeline.inner_folds = 3;
  o.pipeline.grid.rho1 = {0.01, 0.1, 1.0};
  o.pipeline.grid.rho2 = {0.01, 0.1};
  o.pipeline.grid.lambda_count = 15;
  o.pipeline.grid.pls_components = {1, 2};
  o.pipeline.stacking.internal_folds = 3;
  o.pipeline.stacking.combiner_lambdas = 5;
  o.bootstrap_resamples = 200;
  o.seed = seed;
  return o;
}

bool same_summary(const MetricSummary& a, const MetricSummary& b) {
  return a.mean == b.mean && a.ci_lo == b.ci_lo && a.ci_hi == b.ci_hi && a.per_repeat == b.per_repeat;
}

}  // namespace

TEST(Grid, DefaultsMatchPublishedSets) {
  std::vector<double> powers;
  for (double e = -3.0; e <= 2.0 + 1e-9; e += 0.5) powers.push_back(std::pow(10.0, e));
  std::vector<double> rho1 = powers, rho2 = powers;
  for (int v = 200; v <= 500; v += 50) rho1.push_back(v);
  for (int v = 200; v <= 1000; v += 50) rho2.push_back(v);
  const Grid g;
  ASSERT_EQ(g.rho1.size(), rho1.size());
  ASSERT_EQ(g.rho2.size(), rho2.size());
  for (std::size_t i = 0; i < rho1.size(); ++i) EXPECT_NEAR(g.rho1[i], rho1[i], 1e-12 * rho1[i]);
  for (std::size_t i = 0; i < rho2.size(); ++i) EXPECT_NEAR(g.rho2[i], rho2[i], 1e-12 * rho2[i]);
  EXPECT_EQ(g.pls_components, (std::vector<Index>{5, 10, 15, 17, 20, 25}));
  EXPECT_EQ(g.lambda_count, 100);
  EXPECT_NO_THROW(g.validate());
  Grid bad;
  bad.rho1 = {1.0, 0.5};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Names, ParseAndPrint) {
  for (Method m : {Method::SepEN, Method::AllEN, Method::MTLasso, Method::JFS, Method::Dirty, Method::TraceNorm})
    EXPECT_EQ(parse_method(to_string(m)), m);
  for (Harmonization h : {Harmonization::None, Harmonization::ComBat, Harmonization::ComBatAge,
                          Harmonization::ComBatRegAge, Harmonization::PLS, Harmonization::PLSAge})
    EXPECT_EQ(parse_harmonization(to_string(h)), h);
  EXPECT_EQ(parse_method("sep_en"), Method::SepEN);
  EXPECT_EQ(parse_harmonization("combat-age"), Harmonization::ComBatAge);
  EXPECT_THROW(parse_method("SVR"), ConfigError);
  EXPECT_THROW(parse_harmonization("PCA"), ConfigError);
  EXPECT_TRUE(is_multitask(Method::Dirty));
  EXPECT_FALSE(is_multitask(Method::SepEN));
  EXPECT_EQ(penalty_of(Method::JFS), MtlPenalty::JFS);
}

TEST(Blocks, DefaultBlockCount) {
  EXPECT_EQ(default_blocks(122).block_count(), 13);
  EXPECT_EQ(default_blocks(16).block_count(), 2);
  EXPECT_EQ(default_blocks(5).block_count(), 2);
}

TEST(NestedCv, DeterministicAndIndependentOfWorkerCount) {
  const SynthCohort sc = generate(small_spec(1));
  CvOptions o = quick_options(5);
  for (Method m : {Method::SepEN, Method::JFS}) {
    const MethodSpec spec{m, Harmonization::ComBat, PartitionScheme::ByGroup};
    const EvalEntry a = nested_cv(sc.cohort, spec, "M12", o);
    o.jobs = 3;
    const EvalEntry b = nested_cv(sc.cohort, spec, "M12", o);
    o.jobs = 1;
    ASSERT_EQ(a.groups.size(), b.groups.size());
    EXPECT_EQ(a.selections, b.selections);
    for (std::size_t g = 0; g < a.groups.size(); ++g) {
      EXPECT_TRUE(same_summary(a.groups[g].r, b.groups[g].r));
      EXPECT_TRUE(same_summary(a.groups[g].mae, b.groups[g].mae));
    }
  }
}

TEST(NestedCv, SeedChangesFolds) {
  const SynthCohort sc = generate(small_spec(1));
  const MethodSpec spec{Method::AllEN, Harmonization::None, PartitionScheme::ByGroup};
  const Matrix a = cross_validated_predictions(sc.cohort, spec, "M12", quick_options(1), nullptr);
  const Matrix b = cross_validated_predictions(sc.cohort, spec, "M12", quick_options(2), nullptr);
  EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(NestedCv, NoiselessPooledSignalIsRecovered) {
  SynthSpec s = small_spec(3);
  s.subjects_per_cell = 40;
  s.noise_sd = 0.0;
  s.task_jitter = 0.0;
  s.task_support = 0;
  s.group_offsets = {0.0, 0.0, 0.0};
  s.batch_shift = {0.0, 0.0};
  s.age_slope = 0.0;
  s.missing_rate = {0.0};
  const SynthCohort sc = generate(s);
  const EvalEntry e = nested_cv(sc.cohort, {Method::AllEN, Harmonization::None, PartitionScheme::ByGroup}, "M12",
                                quick_options(4));
  const GroupResult& all = e.groups.back();
  EXPECT_EQ(all.group, "ALL");
  EXPECT_GE(*all.r.mean, 0.999);
}

TEST(NestedCv, ReportsEveryGroupAndFlagsLowN) {
  SynthSpec s = small_spec(6);
  s.cell_sizes = {20, 20, 20, 20, 6, 6};
  s.missing_rate = {0.0};
  const SynthCohort sc = generate(s);
  const EvalEntry e = nested_cv(sc.cohort, {Method::AllEN, Harmonization::None, PartitionScheme::ByGroup}, "M12",
                                quick_options(1));
  ASSERT_EQ(e.groups.size(), 4u);
  EXPECT_EQ(e.groups[0].group, "NC");
  EXPECT_EQ(e.groups[2].group, "AD");
  EXPECT_EQ(e.groups[2].n, 12);
  EXPECT_TRUE(e.groups[2].low_n);
  EXPECT_FALSE(e.groups[0].low_n);
  EXPECT_EQ(e.groups[3].n, 92);
  bool warned = false;
  for (const auto& w : e.warnings) warned |= w.find("AD") != std::string::npos;
  EXPECT_TRUE(warned);
  EXPECT_EQ(e.selections.size(), 8u);
  for (const auto& g : e.groups) {
    EXPECT_EQ(g.r.per_repeat.size(), 2u);
    if (g.mae.ci_lo) {
      EXPECT_LE(*g.mae.ci_lo, *g.mae.mean);
      EXPECT_GE(*g.mae.ci_hi, *g.mae.mean);
    }
  }
}

class SplitLeakage : public ::testing::TestWithParam<std::pair<Method, Harmonization>> {};

TEST_P(SplitLeakage, TestRowsAndOutsidersDoNotInfluenceFit) {
  const auto [method, harm] = GetParam();
  const SynthCohort sc = generate(small_spec(7));
  const Vector y = target_vector(sc.cohort.horizon("M12"));
  const IndexSet usable = sc.cohort.horizon("M12").observed();
  const auto folds = stratified_folds(usable, select_rows(y, usable), 4, 9);
  const IndexSet& test = folds[0];
  IndexSet train = complement(usable, test);
  const IndexSet outsiders = complement(usable, train);  // test rows plus nothing else
  const MethodSpec spec{method, harm, PartitionScheme::ByGroup};
  const PipelineOptions opts = quick_options(1).pipeline;
  const TaskPartition part = partition_tasks(sc.cohort, spec.partition);
  const SplitResult base = run_split(sc.cohort, y, part, spec, opts, train, test, 11);

  // Scrambling test targets changes nothing.
  Vector y2 = y;
  for (Index i : test) y2(i) = 1e3 * (static_cast<double>(i % 7) - 3.0);
  const SplitResult scrambled = run_split(sc.cohort, y2, part, spec, opts, train, test, 11);
  EXPECT_EQ(base.selection, scrambled.selection);
  EXPECT_LE((base.predictions - scrambled.predictions).cwiseAbs().maxCoeff(), 1e-12);

  // Perturbing features of rows outside the split (missing targets) changes nothing.
  Cohort c2 = sc.cohort;
  bool touched = false;
  for (Index i = 0; i < c2.size(); ++i)
    if (!std::isfinite(y(i))) {
      c2.features.row(i).array() += 50.0;
      touched = true;
    }
  ASSERT_TRUE(touched);
  const SplitResult shifted = run_split(c2, y, part, spec, opts, train, test, 11);
  EXPECT_LE((base.predictions - shifted.predictions).cwiseAbs().maxCoeff(), 1e-12);

  // Each test row's prediction depends only on its own features.
  Cohort c3 = sc.cohort;
  c3.features.row(test[1]).array() += 5.0;
  const SplitResult moved = run_split(c3, y, part, spec, opts, train, test, 11);
  EXPECT_EQ(base.predictions(0), moved.predictions(0));
  (void)outsiders;
}

INSTANTIATE_TEST_SUITE_P(
    Methods, SplitLeakage,
    ::testing::Values(std::pair{Method::AllEN, Harmonization::ComBat}, std::pair{Method::SepEN, Harmonization::None},
                      std::pair{Method::MTLasso, Harmonization::ComBatAge},
                      std::pair{Method::Dirty, Harmonization::ComBatRegAge},
                      std::pair{Method::AllEN, Harmonization::PLS}, std::pair{Method::JFS, Harmonization::PLSAge},
                      std::pair{Method::TraceNorm, Harmonization::None}));

TEST(RunSplit, RejectsTrainRowsWithoutTargets) {
  const SynthCohort sc = generate(small_spec(8));
  const Vector y = target_vector(sc.cohort.horizon("M12"));
  IndexSet train = all_rows(sc.cohort.size());
  const MethodSpec spec{Method::AllEN, Harmonization::None, PartitionScheme::ByGroup};
  EXPECT_ANY_THROW(run_split(sc.cohort, y, partition_tasks(sc.cohort, spec.partition), spec,
                             quick_options(1).pipeline, train, IndexSet{0}, 1));
}

TEST(LinearModel, FitThenPredictReproducesTraining) {
  const SynthCohort sc = generate(small_spec(9));
  for (Method m : {Method::SepEN, Method::AllEN, Method::JFS}) {
    const MethodSpec spec{m, Harmonization::None, PartitionScheme::ByGroup};
    const LinearModel model =
        fit_linear_model(sc.cohort, spec, "M12", quick_options(1).pipeline, 3, {{"lambda", 0.05}, {"rho1", 0.05}, {"rho2", 0.01}});
    const Vector p = predict(model, sc.cohort);
    ASSERT_EQ(p.size(), sc.cohort.size());
    const Matrix z = model.standardizer.apply(sc.cohort.features);
    for (Index i = 0; i < sc.cohort.size(); i += 17) {
      const Index t = model.task_index(m == Method::AllEN ? "ALL" : sc.cohort.group[static_cast<std::size_t>(i)]);
      EXPECT_NEAR(p(i), z.row(i).dot(model.weights.col(t)) + model.biases(t), 1e-10);
    }
  }
  const MethodSpec harmonized{Method::AllEN, Harmonization::ComBat, PartitionScheme::ByGroup};
  EXPECT_THROW(fit_linear_model(sc.cohort, harmonized, "M12", quick_options(1).pipeline, 3), ConfigError);
}

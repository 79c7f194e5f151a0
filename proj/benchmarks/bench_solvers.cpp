#include <benchmark/benchmark.h>

#include <cogmtl/eval.hpp>
#include <cogmtl/harmonize.hpp>
#include <cogmtl/prox.hpp>
#include <cogmtl/solvers.hpp>
#include <cogmtl/synth.hpp>

using namespace cogmtl;

namespace {

// Three tasks sharing the cohort's features, sized like a typical outer training fold.
MultiTaskData cohort_tasks(Index features) {
  SynthSpec s;
  s.subjects_per_cell = 60;
  s.features = features;
  s.blocks = 2;
  s.shared_support = 4;
  s.task_support = 2;
  s.horizons = {"M12"};
  s.horizon_scale = {1.0};
  s.missing_rate = {0.0};
  s.seed = 5;
  const SynthCohort sc = generate(s);
  const Vector y = target_vector(sc.cohort.horizon("M12"));
  MultiTaskData d;
  for (const char* g : {"NC", "MCI", "AD"}) {
    IndexSet rows;
    for (Index i = 0; i < sc.cohort.size(); ++i)
      if (sc.cohort.group[static_cast<std::size_t>(i)] == g) rows.push_back(i);
    d.x.push_back(select_rows(sc.cohort.features, rows));
    d.y.push_back(select_rows(y, rows));
  }
  return d;
}

void BM_MultiTask(benchmark::State& state, MtlPenalty penalty) {
  const MultiTaskData d = cohort_tasks(state.range(0));
  const double rho2 = penalty == MtlPenalty::TraceNorm ? 0.0 : 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(fista_solve(d, penalty, 0.1, rho2, {}));
}
BENCHMARK_CAPTURE(BM_MultiTask, MTLasso, MtlPenalty::MTLasso)->Arg(20)->Arg(122);
BENCHMARK_CAPTURE(BM_MultiTask, JFS, MtlPenalty::JFS)->Arg(20)->Arg(122);
BENCHMARK_CAPTURE(BM_MultiTask, Dirty, MtlPenalty::Dirty)->Arg(20)->Arg(122);
BENCHMARK_CAPTURE(BM_MultiTask, TraceNorm, MtlPenalty::TraceNorm)->Arg(20)->Arg(122);

void BM_ElasticNetPath(benchmark::State& state) {
  const MultiTaskData d = cohort_tasks(state.range(0));
  const auto lambdas = lambda_path(elastic_net_lambda_max(d.x[0], d.y[0], 0.5), 50, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(fit_elastic_net_path(d.x[0], d.y[0], lambdas, 0.5));
}
BENCHMARK(BM_ElasticNetPath)->Arg(20)->Arg(122);

void BM_NuclearProx(benchmark::State& state) {
  const Matrix w = cohort_tasks(state.range(0)).x[0].topRows(3).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(apply_prox({ProxKind::Nuclear, 0.5}, w));
}
BENCHMARK(BM_NuclearProx)->Arg(20)->Arg(122);

void BM_Combat(benchmark::State& state) {
  SynthSpec s;
  s.subjects_per_cell = 100;
  s.features = state.range(0);
  s.blocks = 2;
  s.seed = 9;
  const SynthCohort sc = generate(s);
  const Matrix age = covariate_column(sc.cohort.age);
  for (auto _ : state) benchmark::DoNotOptimize(combat_fit(sc.cohort.features, sc.cohort.batch, age));
}
BENCHMARK(BM_Combat)->Arg(122);

}  // namespace

BENCHMARK_MAIN();

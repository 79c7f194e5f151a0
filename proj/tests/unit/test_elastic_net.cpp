#include <gtest/gtest.h>

#include <cogmtl/solvers.hpp>
#include <cogmtl/synth.hpp>

#include "support.hpp"

using namespace cogmtl;
using namespace testing_support;

namespace {

SolveOptions tight() {
  SolveOptions o;
  o.max_iter = 100000;
  o.rel_tol = 1e-13;
  return o;
}

struct Problem {
  Matrix x;
  Vector y;
};

Problem make_problem(std::uint64_t seed, Index n, Index m, double noise = 0.5) {
  std::mt19937_64 rng(seed);
  Problem p{random_matrix(rng, n, m), Vector()};
  Vector w = Vector::Zero(m);
  for (Index j = 0; j < std::min<Index>(m, 3); ++j) w(j) = 1.5 - j;
  p.y = p.x * w + random_vector(rng, n, noise) + Vector::Constant(n, 2.0);
  return p;
}

// Largest violation of the optimality conditions, computed from scratch.
double kkt_violation(const Matrix& x, const Vector& y, const ElasticNetModel& m) {
  const double n = static_cast<double>(x.rows());
  const Vector r = y - x * m.coef - Vector::Constant(x.rows(), m.intercept);
  double worst = std::abs(r.sum() / n);
  for (Index j = 0; j < x.cols(); ++j) {
    const double g = x.col(j).dot(r) / n - m.lambda * (1.0 - m.alpha) * m.coef(j);
    const double l1 = m.lambda * m.alpha;
    if (m.coef(j) != 0.0)
      worst = std::max(worst, std::abs(g - l1 * (m.coef(j) > 0 ? 1.0 : -1.0)));
    else
      worst = std::max(worst, std::max(0.0, std::abs(g) - l1));
  }
  return worst;
}

}  // namespace

TEST(ElasticNet, SingleFeatureClosedForm) {
  const Problem p = make_problem(1, 40, 1);
  const double n = 40.0;
  const Vector xc = p.x.col(0).array() - p.x.col(0).mean();
  const Vector yc = p.y.array() - p.y.mean();
  for (double alpha : {1.0, 0.5, 0.1}) {
    for (double lambda : {0.01, 0.2, 0.7}) {
      const double z = xc.dot(yc) / n;
      const double shrunk = std::copysign(std::max(std::abs(z) - lambda * alpha, 0.0), z);
      const double expected = shrunk / (xc.squaredNorm() / n + lambda * (1.0 - alpha));
      const ElasticNetModel m = fit_elastic_net(p.x, p.y, lambda, alpha, tight());
      EXPECT_TRUE(m.converged);
      EXPECT_NEAR(m.coef(0), expected, 1e-9) << "alpha=" << alpha << " lambda=" << lambda;
      EXPECT_NEAR(m.intercept, p.y.mean() - expected * p.x.col(0).mean(), 1e-9);
    }
  }
}

TEST(ElasticNet, ZeroPenaltyIsLeastSquares) {
  const Problem p = make_problem(2, 60, 4);
  Matrix design(60, 5);
  design << Vector::Ones(60), p.x;
  const Vector ols = design.colPivHouseholderQr().solve(p.y);
  const ElasticNetModel m = fit_elastic_net(p.x, p.y, 0.0, 1.0, tight());
  EXPECT_NEAR(m.intercept, ols(0), 1e-7);
  EXPECT_LE((m.coef - ols.tail(4)).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(ElasticNet, LambdaMaxIsTheNullThreshold) {
  const Problem p = make_problem(3, 50, 6);
  for (double alpha : {1.0, 0.5}) {
    const double lmax = elastic_net_lambda_max(p.x, p.y, alpha);
    const Vector yc = p.y.array() - p.y.mean();
    const Matrix xc = p.x.rowwise() - p.x.colwise().mean();
    EXPECT_NEAR(lmax, (xc.transpose() * yc).cwiseAbs().maxCoeff() / (50.0 * alpha), 1e-12);
    EXPECT_EQ(fit_elastic_net(p.x, p.y, lmax * 1.0001, alpha, tight()).coef.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(fit_elastic_net(p.x, p.y, lmax * 0.99, alpha, tight()).coef.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(ElasticNet, SatisfiesOptimalityConditions) {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    const Problem p = make_problem(seed, 45, 12);
    const double lmax = elastic_net_lambda_max(p.x, p.y, 0.5);
    for (double frac : {0.5, 0.1, 0.01}) {
      const ElasticNetModel m = fit_elastic_net(p.x, p.y, frac * lmax, 0.5, tight());
      EXPECT_TRUE(m.converged);
      EXPECT_LE(kkt_violation(p.x, p.y, m), 1e-6);
    }
  }
}

TEST(ElasticNet, MatchesBruteForceOnTwoFeatures) {
  const GridBox box{-3.0, 3.0, 0.01};
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const Problem p = make_problem(seed, 30, 2);
    for (double alpha : {1.0, 0.3}) {
      const double lambda = 0.2;
      const ElasticNetModel m = fit_elastic_net(p.x, p.y, lambda, alpha, tight());
      const BruteForceResult bf =
          brute_force_penalized_ls(p.x, p.y, PenaltySpec::make_elastic_net(lambda, alpha), box);
      const double f = elastic_net_objective(p.x, p.y, m);
      EXPECT_LE(f, bf.objective + 1e-12);
      EXPECT_NEAR(f, bf.objective, 1e-3);
      EXPECT_LE((m.coef - bf.w.col(0)).cwiseAbs().maxCoeff(), 0.05);
    }
  }
}

TEST(ElasticNet, PathIsWarmStartedButEquivalent) {
  const Problem p = make_problem(30, 40, 8);
  const auto lambdas = lambda_path(elastic_net_lambda_max(p.x, p.y, 0.5), 10, 1e-3);
  ASSERT_EQ(lambdas.size(), 10u);
  EXPECT_NEAR(lambdas.back() / lambdas.front(), 1e-3, 1e-12);
  for (std::size_t i = 1; i < lambdas.size(); ++i) EXPECT_LT(lambdas[i], lambdas[i - 1]);
  const auto path = fit_elastic_net_path(p.x, p.y, lambdas, 0.5, tight());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const ElasticNetModel cold = fit_elastic_net(p.x, p.y, lambdas[i], 0.5, tight());
    EXPECT_LE((path[i].coef - cold.coef).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ElasticNet, RecoversSparseSupportAtHighSnr) {
  // N = 200, M = 20, signal variance 10x the noise variance, equal L1/L2 mix.
  std::mt19937_64 rng(31);
  const Index n = 200, m = 20;
  const Matrix x = random_matrix(rng, n, m);
  Vector w = Vector::Zero(m);
  w(2) = 1.5;
  w(7) = -1.0;
  w(11) = 0.8;
  w(15) = -0.6;
  const double noise_sd = std::sqrt(w.squaredNorm() / 10.0);
  const Vector y = x * w + random_vector(rng, n, noise_sd);
  const auto lambdas = lambda_path(elastic_net_lambda_max(x, y, 0.5), 100, 1e-3);
  bool recovered = false;
  for (const auto& model : fit_elastic_net_path(x, y, lambdas, 0.5, tight())) {
    bool same = true;
    for (Index j = 0; j < m; ++j) same = same && ((model.coef(j) != 0.0) == (w(j) != 0.0));
    recovered = recovered || same;
  }
  EXPECT_TRUE(recovered);
}

TEST(ElasticNet, NoiselessFitHasUnitTrainingCorrelation) {
  const Problem p = make_problem(32, 60, 8, 0.0);
  const auto model = fit_elastic_net(p.x, p.y, 1e-6, 0.5, tight());
  const Vector pred = predict(model, p.x);
  const Vector a = pred.array() - pred.mean();
  const Vector b = p.y.array() - p.y.mean();
  EXPECT_NEAR(a.dot(b) / (a.norm() * b.norm()), 1.0, 1e-6);
}

TEST(ElasticNet, PredictUsesIntercept) {
  ElasticNetModel m;
  m.coef = Vector::Constant(2, 0.5);
  m.intercept = 1.0;
  Matrix x(1, 2);
  x << 2.0, 4.0;
  EXPECT_DOUBLE_EQ(predict(m, x)(0), 4.0);
}

TEST(ElasticNet, RejectsBadArguments) {
  const Problem p = make_problem(4, 10, 2);
  EXPECT_THROW(fit_elastic_net(p.x, p.y, -1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(fit_elastic_net(p.x, p.y, 1.0, 1.5), std::invalid_argument);
  EXPECT_THROW(fit_elastic_net(p.x, Vector::Zero(3), 1.0, 0.5), std::invalid_argument);
}

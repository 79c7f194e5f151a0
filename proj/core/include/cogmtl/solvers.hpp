#pragma once

#include <string_view>
#include <vector>

#include "cogmtl/core.hpp"

namespace cogmtl {

struct SolveOptions {
  int max_iter = 1000;
  double rel_tol = 1e-6;
  double shrink = 0.5;        // backtracking step multiplier, in (0, 1)
  double initial_step = 1.0;  // first trial step for proximal gradient

  void validate() const;
};

// ---------------------------------------------------------------------------
// Single-task elastic net
// ---------------------------------------------------------------------------

/// Minimizer of (1/2N) sum (y - b - x a)^2 + lambda [(1-alpha)/2 ||a||^2 + alpha ||a||_1].
struct ElasticNetModel {
  Vector coef;
  double intercept = 0.0;
  double lambda = 0.0;
  double alpha = 1.0;
  bool converged = false;
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Cyclic coordinate descent with covariance updates. Non-convergence is
/// reported through `converged`, never silently.
ElasticNetModel fit_elastic_net(const Matrix& x, const Vector& y, double lambda, double alpha,
                                const SolveOptions& opts = {});

/// Warm-started fits along `lambdas` (any order; returned in the same order).
std::vector<ElasticNetModel> fit_elastic_net_path(const Matrix& x, const Vector& y, const std::vector<double>& lambdas,
                                                  double alpha, const SolveOptions& opts = {});

/// Smallest lambda for which every coefficient is zero: max_j |<x_j, y - ybar>| / (N max(alpha, 1e-3)).
double elastic_net_lambda_max(const Matrix& x, const Vector& y, double alpha);

/// `count` log-spaced values from lambda_max down to min_ratio * lambda_max (descending).
std::vector<double> lambda_path(double lambda_max, int count = 100, double min_ratio = 1e-4);

double elastic_net_objective(const Matrix& x, const Vector& y, const ElasticNetModel& model);

Vector predict(const ElasticNetModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Multitask least squares with structured penalties
// ---------------------------------------------------------------------------

enum class MtlPenalty {
  MTLasso,    // rho1 ||W||_1 + rho2 ||W||_F^2
  JFS,        // rho1 ||W||_{2,1} + rho2 ||W||_F^2
  Dirty,      // rho1 ||R||_{1,inf} + rho2 ||S||_1, W = S + R
  TraceNorm,  // rho1 ||W||_*
};

MtlPenalty parse_mtl_penalty(std::string_view name);
std::string_view to_string(MtlPenalty penalty);

/// One design matrix and target vector per task; all tasks share the column space.
struct MultiTaskData {
  std::vector<Matrix> x;
  std::vector<Vector> y;

  [[nodiscard]] Index task_count() const { return static_cast<Index>(x.size()); }
  [[nodiscard]] Index feature_count() const { return x.empty() ? 0 : x.front().cols(); }
  void validate() const;
};

struct MultiTaskModel {
  Matrix w;       // M x S
  Vector biases;  // S
  MtlPenalty penalty = MtlPenalty::MTLasso;
  double rho1 = 0.0;
  double rho2 = 0.0;
  Matrix sparse_part;  // Dirty only: elementwise-sparse S, W = S + R
  Matrix block_part;   // Dirty only: row-block R

  double objective = 0.0;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  std::vector<double> history;  // accepted objective values, one per iteration
};

/// Centered per-task Gram form of sum_d (1/2N_d) ||X_d w_d + b_d - y_d||^2 + ridge ||W||_F^2,
/// with the biases eliminated. Exposed for gradient checks and custom solvers.
class LeastSquaresLoss {
 public:
  LeastSquaresLoss(const MultiTaskData& data, double ridge);

  [[nodiscard]] double value(const Matrix& w) const;
  [[nodiscard]] Matrix gradient(const Matrix& w) const;
  /// Biases that make the centered solution exact for the raw data.
  [[nodiscard]] Vector biases(const Matrix& w) const;
  [[nodiscard]] Index task_count() const { return static_cast<Index>(gram_.size()); }
  [[nodiscard]] Index feature_count() const { return x_mean_.rows(); }

 private:
  std::vector<Matrix> gram_;  // X_dc^T X_dc / N_d
  Matrix cross_;              // M x S, X_dc^T y_dc / N_d
  Vector offset_;             // S, y_dc^T y_dc / (2 N_d)
  Matrix x_mean_;             // M x S
  Vector y_mean_;             // S
  double ridge_ = 0.0;
};

/// Accelerated proximal gradient with backtracking and function-value restart.
/// For Dirty the iterate is the pair (S, R) and the separable prox acts blockwise.
/// `warm_start` is an initial W (for Dirty, placed in R).
MultiTaskModel fista_solve(const MultiTaskData& data, MtlPenalty penalty, double rho1, double rho2,
                           const SolveOptions& opts = {}, const Matrix* warm_start = nullptr);

MultiTaskModel fit_mtl_lasso(const MultiTaskData& data, double rho1, double rho_l2, const SolveOptions& opts = {});
MultiTaskModel fit_jfs(const MultiTaskData& data, double rho1, double rho_l2, const SolveOptions& opts = {});
MultiTaskModel fit_dirty(const MultiTaskData& data, double rho1, double rho2, const SolveOptions& opts = {});
MultiTaskModel fit_trace(const MultiTaskData& data, double rho1, const SolveOptions& opts = {});

/// Penalized objective of `model` evaluated directly on the raw task data.
double mtl_objective(const MultiTaskData& data, const MultiTaskModel& model);

/// Penalty part of the objective for W (Dirty uses the stored decomposition).
double mtl_penalty_value(const MultiTaskModel& model);

Vector predict(const MultiTaskModel& model, const Matrix& x, Index task);

}  // namespace cogmtl

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cogmtl/solvers.hpp"

namespace cogmtl {

void SolveOptions::validate() const {
  if (max_iter < 1) throw std::invalid_argument("SolveOptions: max_iter must be positive");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("SolveOptions: rel_tol must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("SolveOptions: shrink must lie in (0, 1)");
  if (!(initial_step > 0.0)) throw std::invalid_argument("SolveOptions: initial_step must be positive");
}

namespace {

struct CenteredProblem {
  Vector x_mean;
  double y_mean = 0.0;
  Matrix gram;   // Xc^T Xc / N
  Vector cross;  // Xc^T yc / N
};

CenteredProblem center(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw std::invalid_argument("elastic net: X has " + std::to_string(x.rows()) +
                                                        " rows but y has " + std::to_string(y.size()));
  if (x.rows() < 2) throw std::invalid_argument("elastic net: need at least 2 rows");
  if (!y.allFinite() || !x.allFinite()) throw std::invalid_argument("elastic net: non-finite input");
  CenteredProblem p;
  const double n = static_cast<double>(x.rows());
  p.x_mean = x.colwise().mean().transpose();
  p.y_mean = y.mean();
  const Matrix xc = x.rowwise() - p.x_mean.transpose();
  const Vector yc = y.array() - p.y_mean;
  p.gram = xc.transpose() * xc / n;
  p.cross = xc.transpose() * yc / n;
  return p;
}

void check_penalty(double lambda, double alpha) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("elastic net: lambda must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("elastic net: alpha must lie in [0, 1]");
}

double kkt_violation(const Vector& a, const Vector& grad, double lambda, double alpha) {
  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);
  double worst = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    const double r = grad(j) - l2 * a(j);
    const double v = a(j) != 0.0 ? std::abs(r - l1 * std::copysign(1.0, a(j))) : std::max(std::abs(r) - l1, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

ElasticNetModel solve_centered(const CenteredProblem& p, double lambda, double alpha, const SolveOptions& opts,
                               Vector a) {
  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);
  const Index m = p.gram.rows();
  const double scale = std::max(1.0, p.cross.size() ? p.cross.cwiseAbs().maxCoeff() : 0.0);
  Vector grad = p.cross - p.gram * a;  // negative gradient of the loss

  ElasticNetModel model;
  model.lambda = lambda;
  model.alpha = alpha;
  for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
    double max_step = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double gjj = p.gram(j, j);
      const double denom = gjj + l2;
      const double old = a(j);
      double next = 0.0;
      if (denom > 0.0) {
        const double z = grad(j) + gjj * old;
        next = (z > l1 ? z - l1 : (z < -l1 ? z + l1 : 0.0)) / denom;
      }
      const double delta = next - old;
      if (delta != 0.0) {
        grad -= p.gram.col(j) * delta;
        a(j) = next;
        max_step = std::max(max_step, std::abs(delta) * std::sqrt(std::max(gjj, 1e-300)));
      }
    }
    model.iterations = sweep;
    if (max_step <= opts.rel_tol * scale || sweep == opts.max_iter) {
      grad = p.cross - p.gram * a;
      model.kkt_residual = kkt_violation(a, grad, lambda, alpha);
      if (model.kkt_residual <= opts.rel_tol * scale) {
        model.converged = true;
        break;
      }
    }
  }
  model.coef = std::move(a);
  model.intercept = p.y_mean - p.x_mean.dot(model.coef);
  return model;
}

}  // namespace

ElasticNetModel fit_elastic_net(const Matrix& x, const Vector& y, double lambda, double alpha,
                                const SolveOptions& opts) {
  check_penalty(lambda, alpha);
  opts.validate();
  const auto p = center(x, y);
  return solve_centered(p, lambda, alpha, opts, Vector::Zero(x.cols()));
}

std::vector<ElasticNetModel> fit_elastic_net_path(const Matrix& x, const Vector& y, const std::vector<double>& lambdas,
                                                  double alpha, const SolveOptions& opts) {
  opts.validate();
  for (double l : lambdas) check_penalty(l, alpha);
  const auto p = center(x, y);
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lambdas[a] > lambdas[b]; });
  std::vector<ElasticNetModel> out(lambdas.size());
  Vector warm = Vector::Zero(x.cols());
  for (auto k : order) {
    out[k] = solve_centered(p, lambdas[k], alpha, opts, warm);
    warm = out[k].coef;
  }
  return out;
}

double elastic_net_lambda_max(const Matrix& x, const Vector& y, double alpha) {
  const auto p = center(x, y);
  const double c = p.cross.size() ? p.cross.cwiseAbs().maxCoeff() : 0.0;
  return c / std::max(alpha, 1e-3);
}

std::vector<double> lambda_path(double lambda_max, int count, double min_ratio) {
  if (count < 1) throw std::invalid_argument("lambda_path: count must be positive");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw std::invalid_argument("lambda_path: min_ratio must lie in (0, 1]");
  // A null cross-covariance makes every lambda equivalent; keep the grid well defined.
  const double top = lambda_max > 0.0 ? lambda_max : 1.0;
  std::vector<double> path(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    path[static_cast<std::size_t>(k)] = top * std::pow(min_ratio, frac);
  }
  return path;
}

double elastic_net_objective(const Matrix& x, const Vector& y, const ElasticNetModel& model) {
  const Vector r = y - predict(model, x);
  const double n = static_cast<double>(y.size());
  return r.squaredNorm() / (2.0 * n) +
         model.lambda * ((1.0 - model.alpha) * 0.5 * model.coef.squaredNorm() + model.alpha * model.coef.lpNorm<1>());
}

Vector predict(const ElasticNetModel& model, const Matrix& x) {
  if (x.cols() != model.coef.size())
    throw std::invalid_argument("predict: model has " + std::to_string(model.coef.size()) + " features, input has " +
                                std::to_string(x.cols()));
  return (x * model.coef).array() + model.intercept;
}

}  // namespace cogmtl

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cogmtl/errors.hpp"
#include "cogmtl/prox.hpp"
#include "cogmtl/solvers.hpp"

namespace cogmtl {

MtlPenalty parse_mtl_penalty(std::string_view name) {
  if (name == "MTLasso") return MtlPenalty::MTLasso;
  if (name == "JFS") return MtlPenalty::JFS;
  if (name == "Dirty") return MtlPenalty::Dirty;
  if (name == "TraceNorm") return MtlPenalty::TraceNorm;
  throw std::invalid_argument("unknown multitask penalty '" + std::string(name) + "'");
}

std::string_view to_string(MtlPenalty penalty) {
  switch (penalty) {
    case MtlPenalty::MTLasso: return "MTLasso";
    case MtlPenalty::JFS: return "JFS";
    case MtlPenalty::Dirty: return "Dirty";
    case MtlPenalty::TraceNorm: return "TraceNorm";
  }
  return "MTLasso";
}

void MultiTaskData::validate() const {
  if (x.empty()) throw std::invalid_argument("multitask data has no tasks");
  if (x.size() != y.size()) throw std::invalid_argument("multitask data: X and y task counts differ");
  const Index m = x.front().cols();
  if (m < 1) throw std::invalid_argument("multitask data has no features");
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (x[d].rows() < 1) throw std::invalid_argument("multitask data: task " + std::to_string(d) + " is empty");
    if (x[d].cols() != m) throw std::invalid_argument("multitask data: tasks disagree on feature count");
    if (x[d].rows() != y[d].size())
      throw std::invalid_argument("multitask data: task " + std::to_string(d) + " X/y row mismatch");
    if (!x[d].allFinite() || !y[d].allFinite())
      throw std::invalid_argument("multitask data: task " + std::to_string(d) + " has non-finite values");
  }
}

LeastSquaresLoss::LeastSquaresLoss(const MultiTaskData& data, double ridge) : ridge_(ridge) {
  data.validate();
  const Index s = data.task_count();
  const Index m = data.feature_count();
  gram_.reserve(static_cast<std::size_t>(s));
  cross_.resize(m, s);
  offset_.resize(s);
  x_mean_.resize(m, s);
  y_mean_.resize(s);
  for (Index d = 0; d < s; ++d) {
    const auto& x = data.x[static_cast<std::size_t>(d)];
    const auto& y = data.y[static_cast<std::size_t>(d)];
    const double n = static_cast<double>(x.rows());
    x_mean_.col(d) = x.colwise().mean().transpose();
    y_mean_(d) = y.mean();
    const Matrix xc = x.rowwise() - x_mean_.col(d).transpose();
    const Vector yc = y.array() - y_mean_(d);
    gram_.push_back(xc.transpose() * xc / n);
    cross_.col(d) = xc.transpose() * yc / n;
    offset_(d) = yc.squaredNorm() / (2.0 * n);
  }
}

double LeastSquaresLoss::value(const Matrix& w) const {
  double total = 0.0;
  for (Index d = 0; d < w.cols(); ++d) {
    const auto& g = gram_[static_cast<std::size_t>(d)];
    total += 0.5 * w.col(d).dot(g * w.col(d)) - cross_.col(d).dot(w.col(d)) + offset_(d);
  }
  return total + ridge_ * w.squaredNorm();
}

Matrix LeastSquaresLoss::gradient(const Matrix& w) const {
  Matrix grad(w.rows(), w.cols());
  for (Index d = 0; d < w.cols(); ++d) grad.col(d) = gram_[static_cast<std::size_t>(d)] * w.col(d) - cross_.col(d);
  if (ridge_ != 0.0) grad += 2.0 * ridge_ * w;
  return grad;
}

Vector LeastSquaresLoss::biases(const Matrix& w) const {
  Vector b(w.cols());
  for (Index d = 0; d < w.cols(); ++d) b(d) = y_mean_(d) - x_mean_.col(d).dot(w.col(d));
  return b;
}

namespace {

// Composite problem over the iterate Z: Z = W for the single-block penalties,
// Z = [S | R] (M x 2S) for Dirty.
class Composite {
 public:
  Composite(const MultiTaskData& data, MtlPenalty penalty, double rho1, double rho2)
      : penalty_(penalty),
        rho1_(rho1),
        rho2_(rho2),
        loss_(data, (penalty == MtlPenalty::MTLasso || penalty == MtlPenalty::JFS) ? rho2 : 0.0),
        tasks_(data.task_count()) {}

  [[nodiscard]] bool dirty() const { return penalty_ == MtlPenalty::Dirty; }
  [[nodiscard]] Index tasks() const { return tasks_; }

  [[nodiscard]] Matrix weights(const Matrix& z) const {
    return dirty() ? Matrix(z.leftCols(tasks_) + z.rightCols(tasks_)) : z;
  }

  [[nodiscard]] double smooth(const Matrix& z) const { return loss_.value(weights(z)); }

  [[nodiscard]] Matrix smooth_gradient(const Matrix& z) const {
    const Matrix g = loss_.gradient(weights(z));
    if (!dirty()) return g;
    Matrix out(z.rows(), z.cols());
    out << g, g;
    return out;
  }

  [[nodiscard]] double nonsmooth(const Matrix& z) const {
    switch (penalty_) {
      case MtlPenalty::MTLasso: return rho1_ * penalty_value(ProxKind::L1, z);
      case MtlPenalty::JFS: return rho1_ * penalty_value(ProxKind::GroupL21Rows, z);
      case MtlPenalty::TraceNorm: return rho1_ * penalty_value(ProxKind::Nuclear, z);
      case MtlPenalty::Dirty:
        return rho2_ * penalty_value(ProxKind::L1, z.leftCols(tasks_)) +
               rho1_ * penalty_value(ProxKind::LInfRows, z.rightCols(tasks_));
    }
    return 0.0;
  }

  [[nodiscard]] Matrix prox(const Matrix& z, double step) const {
    switch (penalty_) {
      case MtlPenalty::MTLasso: return soft_threshold(z, step * rho1_);
      case MtlPenalty::JFS: return prox_group_l21(z, step * rho1_);
      case MtlPenalty::TraceNorm: return prox_nuclear(z, step * rho1_);
      case MtlPenalty::Dirty: {
        Matrix out(z.rows(), z.cols());
        out << soft_threshold(Matrix(z.leftCols(tasks_)), step * rho2_),
            prox_linf_rows(z.rightCols(tasks_), step * rho1_);
        return out;
      }
    }
    return z;
  }

  [[nodiscard]] const LeastSquaresLoss& loss() const { return loss_; }

 private:
  MtlPenalty penalty_;
  double rho1_;
  double rho2_;
  LeastSquaresLoss loss_;
  Index tasks_;
};

}  // namespace

MultiTaskModel fista_solve(const MultiTaskData& data, MtlPenalty penalty, double rho1, double rho2,
                           const SolveOptions& opts, const Matrix* warm_start) {
  opts.validate();
  if (!(rho1 >= 0.0) || !(rho2 >= 0.0)) throw std::invalid_argument("fista_solve: penalties must be non-negative");
  const Composite problem(data, penalty, rho1, rho2);
  const Index m = data.feature_count();
  const Index s = data.task_count();
  const Index width = problem.dirty() ? 2 * s : s;

  Matrix x_prev = Matrix::Zero(m, width);
  if (warm_start != nullptr) {
    if (warm_start->rows() != m || warm_start->cols() != s)
      throw std::invalid_argument("fista_solve: warm start has the wrong shape");
    if (problem.dirty())
      x_prev.rightCols(s) = *warm_start;
    else
      x_prev = *warm_start;
  }

  auto total = [&](const Matrix& z) { return problem.smooth(z) + problem.nonsmooth(z); };
  double f_prev = total(x_prev);
  const double f_limit = 1e3 * std::max({total(Matrix::Zero(m, width)), f_prev, std::numeric_limits<double>::min()});

  MultiTaskModel model;
  model.penalty = penalty;
  model.rho1 = rho1;
  model.rho2 = rho2;
  model.history.push_back(f_prev);

  Matrix y = x_prev;
  double t = 1.0;
  double step = opts.initial_step;
  bool momentum = false;  // whether y differs from x_prev
  constexpr double kMinStep = 1e-30;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    model.iterations = iter;
    const double fy = problem.smooth(y);
    const Matrix grad = problem.smooth_gradient(y);
    Matrix x;
    for (;;) {
      x = problem.prox(y - step * grad, step);
      const Matrix diff = x - y;
      const double bound = fy + (grad.array() * diff.array()).sum() + diff.squaredNorm() / (2.0 * step);
      if (problem.smooth(x) <= bound + 1e-14 * std::abs(bound)) break;
      step *= opts.shrink;
      if (step < kMinStep) throw NumericalError("fista_solve: backtracking step underflow at iteration " + std::to_string(iter));
    }
    const double f = total(x);
    if (!std::isfinite(f) || f > f_limit)
      throw NumericalError("fista_solve: objective diverged at iteration " + std::to_string(iter));

    if (f > f_prev) {
      if (momentum) {
        // Function-value restart: drop the momentum and retry from the last accepted point.
        ++model.restarts;
        y = x_prev;
        t = 1.0;
        momentum = false;
        continue;
      }
      // A plain proximal step cannot increase the objective beyond rounding.
      model.converged = true;
      break;
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    momentum = t > 1.0;
    t = t_next;
    x_prev = std::move(x);
    model.history.push_back(f);
    const double change = std::abs(f_prev - f);
    f_prev = f;
    if (change <= opts.rel_tol * std::max(std::abs(f), std::numeric_limits<double>::min())) {
      model.converged = true;
      break;
    }
  }

  model.objective = f_prev;
  if (problem.dirty()) {
    model.sparse_part = x_prev.leftCols(s);
    model.block_part = x_prev.rightCols(s);
    model.w = model.sparse_part + model.block_part;
  } else {
    model.w = x_prev;
  }
  model.biases = problem.loss().biases(model.w);
  return model;
}

MultiTaskModel fit_mtl_lasso(const MultiTaskData& data, double rho1, double rho_l2, const SolveOptions& opts) {
  return fista_solve(data, MtlPenalty::MTLasso, rho1, rho_l2, opts);
}

MultiTaskModel fit_jfs(const MultiTaskData& data, double rho1, double rho_l2, const SolveOptions& opts) {
  return fista_solve(data, MtlPenalty::JFS, rho1, rho_l2, opts);
}

MultiTaskModel fit_dirty(const MultiTaskData& data, double rho1, double rho2, const SolveOptions& opts) {
  return fista_solve(data, MtlPenalty::Dirty, rho1, rho2, opts);
}

MultiTaskModel fit_trace(const MultiTaskData& data, double rho1, const SolveOptions& opts) {
  return fista_solve(data, MtlPenalty::TraceNorm, rho1, 0.0, opts);
}

double mtl_penalty_value(const MultiTaskModel& model) {
  switch (model.penalty) {
    case MtlPenalty::MTLasso:
      return model.rho1 * penalty_value(ProxKind::L1, model.w) + model.rho2 * model.w.squaredNorm();
    case MtlPenalty::JFS:
      return model.rho1 * penalty_value(ProxKind::GroupL21Rows, model.w) + model.rho2 * model.w.squaredNorm();
    case MtlPenalty::TraceNorm: return model.rho1 * penalty_value(ProxKind::Nuclear, model.w);
    case MtlPenalty::Dirty:
      return model.rho1 * penalty_value(ProxKind::LInfRows, model.block_part) +
             model.rho2 * penalty_value(ProxKind::L1, model.sparse_part);
  }
  return 0.0;
}

double mtl_objective(const MultiTaskData& data, const MultiTaskModel& model) {
  data.validate();
  double loss = 0.0;
  for (Index d = 0; d < data.task_count(); ++d) {
    const auto& y = data.y[static_cast<std::size_t>(d)];
    const Vector r = predict(model, data.x[static_cast<std::size_t>(d)], d) - y;
    loss += r.squaredNorm() / (2.0 * static_cast<double>(y.size()));
  }
  return loss + mtl_penalty_value(model);
}

Vector predict(const MultiTaskModel& model, const Matrix& x, Index task) {
  if (task < 0 || task >= model.w.cols())
    throw std::invalid_argument("predict: task " + std::to_string(task) + " out of range (S=" +
                                std::to_string(model.w.cols()) + ")");
  if (x.cols() != model.w.rows())
    throw std::invalid_argument("predict: model has " + std::to_string(model.w.rows()) + " features, input has " +
                                std::to_string(x.cols()));
  return (x * model.w.col(task)).array() + model.biases(task);
}

}  // namespace cogmtl

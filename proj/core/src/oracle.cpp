#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cogmtl/prox.hpp"
#include "cogmtl/synth.hpp"

namespace cogmtl {

namespace {

/// Loss in Gram form per task: (1/2) w' G w - c' w + k, with the bias profiled out.
struct GramLoss {
  std::vector<Matrix> gram;
  Matrix cross;
  Vector offset;
  Matrix x_mean;
  Vector y_mean;

  explicit GramLoss(const MultiTaskData& data) {
    data.validate();
    const Index s = data.task_count();
    const Index m = data.feature_count();
    cross.resize(m, s);
    offset.resize(s);
    x_mean.resize(m, s);
    y_mean.resize(s);
    for (Index d = 0; d < s; ++d) {
      const auto& x = data.x[static_cast<std::size_t>(d)];
      const auto& y = data.y[static_cast<std::size_t>(d)];
      const double n = static_cast<double>(x.rows());
      x_mean.col(d) = x.colwise().mean().transpose();
      y_mean(d) = y.mean();
      const Matrix xc = x.rowwise() - x_mean.col(d).transpose();
      const Vector yc = y.array() - y_mean(d);
      gram.push_back(xc.transpose() * xc / n);
      cross.col(d) = xc.transpose() * yc / n;
      offset(d) = yc.squaredNorm() / (2.0 * n);
    }
  }

  [[nodiscard]] double value(const Matrix& w) const {
    double f = 0.0;
    for (Index d = 0; d < w.cols(); ++d) {
      const auto wd = w.col(d);
      f += 0.5 * wd.dot(gram[static_cast<std::size_t>(d)] * wd) - cross.col(d).dot(wd) + offset(d);
    }
    return f;
  }

  [[nodiscard]] Vector biases(const Matrix& w) const {
    Vector b(w.cols());
    for (Index d = 0; d < w.cols(); ++d) b(d) = y_mean(d) - x_mean.col(d).dot(w.col(d));
    return b;
  }
};

/// Exact infimal convolution of rho1 ||.||_inf and rho2 ||.||_1 on one row:
/// min over tau >= 0 of rho1 tau + rho2 sum_d max(|w_d| - tau, 0). The function
/// is piecewise linear in tau with kinks at 0 and |w_d|.
double dirty_row(const Matrix& w, Index row, double rho1, double rho2) {
  double best = std::numeric_limits<double>::infinity();
  auto cost = [&](double tau) {
    double c = rho1 * tau;
    for (Index d = 0; d < w.cols(); ++d) c += rho2 * std::max(std::abs(w(row, d)) - tau, 0.0);
    return c;
  };
  best = cost(0.0);
  for (Index d = 0; d < w.cols(); ++d) best = std::min(best, cost(std::abs(w(row, d))));
  return best;
}

double nuclear_norm(const Matrix& w) {
  if (w.cols() == 1) return w.norm();
  if (w.cols() == 2) {
    // Singular values of an M x 2 matrix from the 2 x 2 Gram eigenvalues.
    const double a = w.col(0).squaredNorm();
    const double c = w.col(1).squaredNorm();
    const double b = w.col(0).dot(w.col(1));
    const double tr = a + c;
    const double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
    const double l1 = std::max(0.0, 0.5 * (tr + disc));
    const double l2 = std::max(0.0, 0.5 * (tr - disc));
    return std::sqrt(l1) + std::sqrt(l2);
  }
  return thin_svd(w).sigma.sum();
}

double penalty_at(const PenaltySpec& p, const Matrix& w) {
  if (p.elastic_net) {
    const double l1 = w.cwiseAbs().sum();
    return p.p1 * ((1.0 - p.p2) / 2.0 * w.squaredNorm() + p.p2 * l1);
  }
  switch (p.penalty) {
    case MtlPenalty::MTLasso: return p.p1 * w.cwiseAbs().sum() + p.p2 * w.squaredNorm();
    case MtlPenalty::JFS: return p.p1 * w.rowwise().norm().sum() + p.p2 * w.squaredNorm();
    case MtlPenalty::Dirty: {
      double s = 0.0;
      for (Index r = 0; r < w.rows(); ++r) s += dirty_row(w, r, p.p1, p.p2);
      return s;
    }
    case MtlPenalty::TraceNorm: return p.p1 * nuclear_norm(w);
  }
  return 0.0;
}

void check_penalty(const PenaltySpec& p, const MultiTaskData& data) {
  if (!(p.p1 >= 0.0) || !(p.p2 >= 0.0)) throw std::invalid_argument("brute force: penalty parameters must be non-negative");
  if (p.elastic_net) {
    if (p.p2 > 1.0) throw std::invalid_argument("brute force: elastic-net alpha must lie in [0, 1]");
    if (data.task_count() != 1) throw std::invalid_argument("brute force: elastic net takes a single task");
  }
}

}  // namespace

Index GridBox::points() const {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("grid box needs step > 0 and hi >= lo");
  return static_cast<Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double penalized_objective(const MultiTaskData& data, const PenaltySpec& penalty, const Matrix& w) {
  check_penalty(penalty, data);
  const GramLoss loss(data);
  if (w.rows() != data.feature_count() || w.cols() != data.task_count())
    throw std::invalid_argument("penalized_objective: W shape mismatch");
  return loss.value(w) + penalty_at(penalty, w);
}

BruteForceResult brute_force_penalized_ls(const MultiTaskData& data, const PenaltySpec& penalty, const GridBox& box,
                                          double budget) {
  check_penalty(penalty, data);
  const GramLoss loss(data);
  const Index m = data.feature_count();
  const Index s = data.task_count();
  const Index p = m * s;
  const Index n = box.points();
  const double total = std::pow(static_cast<double>(n), static_cast<double>(p));
  if (total > budget)
    throw std::invalid_argument("brute force: " + std::to_string(total) + " grid points exceed the budget of " +
                                std::to_string(budget));

  auto coord = [&](Index i) { return box.lo + static_cast<double>(i) * box.step; };

  // Flattened (column-major) quadratic form of the loss: 1/2 u'Hu - c'u + k.
  const Index last = p - 1;
  Matrix h = Matrix::Zero(p, p);
  Vector c(p);
  for (Index d = 0; d < s; ++d) {
    h.block(d * m, d * m, m, m) = loss.gram[static_cast<std::size_t>(d)];
    c.segment(d * m, m) = loss.cross.col(d);
  }
  const double k = loss.offset.sum();

  // The objective is convex, so along the last coordinate (others fixed) its
  // restriction to the lattice is a discrete convex sequence. Bisecting on the
  // sign of the forward difference finds that line's lattice minimum exactly,
  // which makes the sweep exhaustive over the full lattice.
  Matrix w = Matrix::Constant(m, s, box.lo);
  Eigen::Map<Vector> u(w.data(), p);
  Vector hu(p);
  BruteForceResult best;
  best.objective = std::numeric_limits<double>::infinity();
  best.grid_points = total;
  std::vector<Index> odometer(static_cast<std::size_t>(last), 0);
  const double a = h(last, last);
  for (;;) {
    u(last) = 0.0;
    hu.noalias() = h * u;
    const double base = 0.5 * u.dot(hu) - c.dot(u) + k;
    const double slope = hu(last) - c(last);
    auto at = [&](Index i) {
      const double v = coord(i);
      u(last) = v;
      return base + slope * v + 0.5 * a * v * v + penalty_at(penalty, w);
    };
    Index lo = 0;
    Index hi = n - 1;
    while (lo < hi) {
      const Index mid = lo + (hi - lo) / 2;
      if (at(mid + 1) - at(mid) >= 0.0)
        hi = mid;
      else
        lo = mid + 1;
    }
    const double f = at(lo);
    if (f < best.objective) {
      best.objective = f;
      best.w = w;
    }
    // Advance the odometer over the remaining coordinates.
    std::size_t j = 0;
    for (; j < odometer.size(); ++j) {
      if (++odometer[j] < n) {
        u(static_cast<Index>(j)) = coord(odometer[j]);
        break;
      }
      odometer[j] = 0;
      u(static_cast<Index>(j)) = coord(0);
    }
    if (j == odometer.size()) break;
  }
  // Report the exact objective rather than the incrementally assembled one.
  best.objective = loss.value(best.w) + penalty_at(penalty, best.w);
  best.biases = loss.biases(best.w);
  return best;
}

BruteForceResult brute_force_penalized_ls(const Matrix& x, const Vector& y, const PenaltySpec& penalty,
                                          const GridBox& box, double budget) {
  MultiTaskData data;
  data.x.push_back(x);
  data.y.push_back(y);
  return brute_force_penalized_ls(data, penalty, box, budget);
}

}  // namespace cogmtl

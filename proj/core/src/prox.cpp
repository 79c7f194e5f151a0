#include "cogmtl/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cogmtl/errors.hpp"

namespace cogmtl {

namespace {

void require_nonnegative(double t, const char* op) {
  if (!(t >= 0.0)) throw std::invalid_argument(std::string(op) + ": threshold must be non-negative");
}

double shrink(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

double penalty_value(ProxKind kind, const Matrix& w) {
  switch (kind) {
    case ProxKind::L1: return w.cwiseAbs().sum();
    case ProxKind::GroupL21Rows: return w.rowwise().norm().sum();
    case ProxKind::LInfRows:
      return w.cols() == 0 ? 0.0 : w.cwiseAbs().rowwise().maxCoeff().sum();
    case ProxKind::Nuclear: return thin_svd(w).sigma.sum();
  }
  return 0.0;
}

Vector soft_threshold(const Vector& v, double t) {
  require_nonnegative(t, "soft_threshold");
  return v.unaryExpr([t](double x) { return shrink(x, t); });
}

Matrix soft_threshold(const Matrix& w, double t) {
  require_nonnegative(t, "soft_threshold");
  return w.unaryExpr([t](double x) { return shrink(x, t); });
}

Matrix prox_group_l21(const Matrix& w, double t) {
  require_nonnegative(t, "prox_group_l21");
  Matrix out = w;
  for (Index j = 0; j < w.rows(); ++j) {
    const double norm = w.row(j).norm();
    if (norm <= t)
      out.row(j).setZero();
    else
      out.row(j) *= 1.0 - t / norm;
  }
  return out;
}

Vector project_l1_ball(const Vector& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_l1_ball: radius must be positive");
  if (v.cwiseAbs().sum() <= radius) return v;
  std::vector<double> u(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return v.unaryExpr([theta](double x) { return shrink(x, theta); });
}

Matrix prox_linf_rows(const Matrix& r, double t) {
  require_nonnegative(t, "prox_linf_rows");
  if (t == 0.0) return r;
  Matrix out(r.rows(), r.cols());
  for (Index j = 0; j < r.rows(); ++j) {
    const Vector row = r.row(j).transpose();
    if (row.cwiseAbs().sum() <= t)
      out.row(j).setZero();
    else
      out.row(j) = (row - project_l1_ball(row, t)).transpose();
  }
  return out;
}

Matrix prox_nuclear(const Matrix& w, double t) {
  require_nonnegative(t, "prox_nuclear");
  if (t == 0.0 || w.size() == 0) return w;
  const ThinSvd svd = thin_svd(w);
  const Vector shrunk = (svd.sigma.array() - t).max(0.0).matrix();
  return svd.u * shrunk.asDiagonal() * svd.v.transpose();
}

Matrix apply_prox(const ProxSpec& spec, const Matrix& w) {
  switch (spec.kind) {
    case ProxKind::L1: return soft_threshold(w, spec.strength);
    case ProxKind::GroupL21Rows: return prox_group_l21(w, spec.strength);
    case ProxKind::LInfRows: return prox_linf_rows(w, spec.strength);
    case ProxKind::Nuclear: return prox_nuclear(w, spec.strength);
  }
  return w;
}

namespace {

// Extends the orthonormal columns [0, filled) of q to a full orthonormal set.
void complete_orthonormal(Matrix& q, Index filled) {
  const Index m = q.rows();
  Index col = filled;
  for (Index e = 0; e < m && col < q.cols(); ++e) {
    Vector cand = Vector::Unit(m, e);
    for (int pass = 0; pass < 2; ++pass)
      for (Index k = 0; k < col; ++k) cand -= q.col(k).dot(cand) * q.col(k);
    const double norm = cand.norm();
    if (norm > 1e-8) q.col(col++) = cand / norm;
  }
}

ThinSvd jacobi_tall(const Matrix& a, int max_sweeps) {
  const Index m = a.rows();
  const Index s = a.cols();
  Matrix work = a;
  Matrix v = Matrix::Identity(s, s);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  int sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == max_sweeps)
      throw NumericalError("thin_svd: Jacobi sweeps did not converge after " + std::to_string(sweep) + " sweeps");
    ++sweep;
    rotated = false;
    for (Index p = 0; p + 1 < s; ++p) {
      for (Index q = p + 1; q < s; ++q) {
        const double alpha = work.col(p).squaredNorm();
        const double beta = work.col(q).squaredNorm();
        const double gamma = work.col(p).dot(work.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double sn = c * t;
        for (Index i = 0; i < m; ++i) {
          const double xp = work(i, p);
          const double xq = work(i, q);
          work(i, p) = c * xp - sn * xq;
          work(i, q) = sn * xp + c * xq;
        }
        for (Index i = 0; i < s; ++i) {
          const double xp = v(i, p);
          const double xq = v(i, q);
          v(i, p) = c * xp - sn * xq;
          v(i, q) = sn * xp + c * xq;
        }
      }
    }
  }

  Vector norms = work.colwise().norm().transpose();
  std::vector<Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return norms(x) > norms(y); });

  ThinSvd out;
  out.sweeps = sweep;
  out.sigma.resize(s);
  out.u = Matrix::Zero(m, s);
  out.v.resize(s, s);
  const double cutoff = (s > 0 ? norms.maxCoeff() : 0.0) * eps * static_cast<double>(std::max(m, s));
  Index filled = 0;
  for (Index k = 0; k < s; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.v.col(k) = v.col(src);
    const double sigma = norms(src);
    if (sigma > cutoff && sigma > 0.0) {
      out.sigma(k) = sigma;
      out.u.col(k) = work.col(src) / sigma;
      filled = k + 1;
    } else {
      out.sigma(k) = 0.0;
    }
  }
  // Columns for null singular values: re-orthonormalize against the kept ones.
  if (filled < s) complete_orthonormal(out.u, filled);
  return out;
}

}  // namespace

ThinSvd thin_svd(const Matrix& a, int max_sweeps) {
  if (!a.allFinite()) throw std::invalid_argument("thin_svd: matrix has non-finite entries");
  if (a.cols() <= a.rows()) return jacobi_tall(a, max_sweeps);
  ThinSvd t = jacobi_tall(a.transpose(), max_sweeps);
  std::swap(t.u, t.v);
  return t;
}

}  // namespace cogmtl

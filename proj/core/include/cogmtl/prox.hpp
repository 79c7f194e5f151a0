#pragma once

#include "cogmtl/core.hpp"

namespace cogmtl {

/// Penalty families whose proximal maps the multitask solvers need.
/// Row-wise kinds treat each row (one feature across tasks) as a group.
enum class ProxKind {
  L1,            // sum |w_ij|
  GroupL21Rows,  // sum_j ||w_j.||_2
  LInfRows,      // sum_j max_d |w_jd|
  Nuclear,       // sum of singular values
};

struct ProxSpec {
  ProxKind kind = ProxKind::L1;
  double strength = 0.0;  // step * rho
};

/// Value of the penalty `kind` at W (unit strength).
double penalty_value(ProxKind kind, const Matrix& w);

/// Elementwise sign(v) * max(|v| - t, 0).
Vector soft_threshold(const Vector& v, double t);
Matrix soft_threshold(const Matrix& w, double t);

/// Row shrinkage w_j <- max(1 - t / ||w_j||, 0) w_j.
Matrix prox_group_l21(const Matrix& w, double t);

/// Euclidean projection onto the l1 ball of the given radius (sort-and-threshold).
Vector project_l1_ball(const Vector& v, double radius);

/// Prox of t * max_d |r_jd| applied to every row, via the Moreau identity
/// prox(r) = r - P_{||.||_1 <= t}(r).
Matrix prox_linf_rows(const Matrix& r, double t);

/// Singular value soft thresholding.
Matrix prox_nuclear(const Matrix& w, double t);

/// Dispatches on spec.kind.
Matrix apply_prox(const ProxSpec& spec, const Matrix& w);

struct ThinSvd {
  Matrix u;      // M x k, orthonormal columns
  Vector sigma;  // k, non-negative, non-increasing
  Matrix v;      // S x k, orthonormal columns
  int sweeps = 0;
};

/// Thin SVD by one-sided (Hestenes) Jacobi rotations on the narrow dimension,
/// k = min(M, S). Throws NumericalError if the sweeps do not converge.
ThinSvd thin_svd(const Matrix& a, int max_sweeps = 80);

}  // namespace cogmtl

#include "cogmtl/harmonize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "cogmtl/errors.hpp"

namespace cogmtl {

Index CombatParams::batch_index(const std::string& label) const {
  const auto it = std::find(batches.begin(), batches.end(), label);
  if (it == batches.end()) throw DataError("batch label '" + label + "' was not seen when the harmonizer was fitted");
  return static_cast<Index>(it - batches.begin());
}

namespace {

double sample_variance(const Eigen::Ref<const Vector>& v) {
  const Index n = v.size();
  if (n < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / static_cast<double>(n - 1);
}

// Least squares with an explicit rank check; `what` names the design in errors.
Matrix solve_design(const Matrix& design, const Matrix& rhs, const char* what) {
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols())
    throw DataError(std::string(what) + ": design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                    " < " + std::to_string(design.cols()) + " columns)");
  return qr.solve(rhs);
}

struct EbResult {
  double gamma;
  double delta2;
  int iterations;
};

}  // namespace

CombatParams combat_fit(const Matrix& features, const std::vector<std::string>& batch, const Matrix& covariates,
                        const CombatOptions& opts) {
  const Index n = features.rows();
  const Index m = features.cols();
  const Index c = covariates.cols();
  if (static_cast<Index>(batch.size()) != n) throw std::invalid_argument("combat_fit: batch label count mismatch");
  if (c > 0 && covariates.rows() != n) throw std::invalid_argument("combat_fit: covariate row count mismatch");
  if (!features.allFinite() || (c > 0 && !covariates.allFinite()))
    throw DataError("combat_fit: non-finite features or covariates");

  CombatParams p;
  {
    std::set<std::string> levels(batch.begin(), batch.end());
    p.batches.assign(levels.begin(), levels.end());
  }
  const Index nb = static_cast<Index>(p.batches.size());
  std::vector<IndexSet> members(static_cast<std::size_t>(nb));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(p.batch_index(batch[static_cast<std::size_t>(i)]))].push_back(i);
  for (Index b = 0; b < nb; ++b)
    if (members[static_cast<std::size_t>(b)].size() < 2)
      throw DataError("combat_fit: batch '" + p.batches[static_cast<std::size_t>(b)] + "' has fewer than 2 subjects");

  Matrix design = Matrix::Zero(n, nb + c);
  for (Index b = 0; b < nb; ++b)
    for (Index i : members[static_cast<std::size_t>(b)]) design(i, b) = 1.0;
  if (c > 0) design.rightCols(c) = covariates;
  const Matrix coef = solve_design(design, features, "combat_fit");  // (B + C) x M

  p.grand_mean = Vector::Zero(m);
  for (Index b = 0; b < nb; ++b)
    p.grand_mean += coef.row(b).transpose() *
                    (static_cast<double>(members[static_cast<std::size_t>(b)].size()) / static_cast<double>(n));
  p.covariate_coef = c > 0 ? Matrix(coef.bottomRows(c).transpose()) : Matrix(m, 0);

  const Matrix resid = features - design * coef;
  p.pooled_var = resid.colwise().squaredNorm().transpose() / static_cast<double>(n);
  for (Index f = 0; f < m; ++f)
    if (!(p.pooled_var(f) > 1e-30)) p.pooled_var(f) = 1.0;

  p.gamma_star = Matrix::Zero(nb, m);
  p.delta_star = Matrix::Ones(nb, m);
  p.gamma_hat = Matrix::Zero(nb, m);
  p.delta_hat = Matrix::Ones(nb, m);
  if (nb == 1) return p;  // nothing to remove

  Matrix stand_mean = p.grand_mean.transpose().replicate(n, 1);
  if (c > 0) stand_mean += covariates * p.covariate_coef.transpose();
  const Vector sd = p.pooled_var.cwiseSqrt();
  const Matrix s = (features - stand_mean).array().rowwise() / sd.transpose().array();

  for (Index b = 0; b < nb; ++b) {
    const auto& rows = members[static_cast<std::size_t>(b)];
    const Matrix sb = select_rows(s, rows);
    p.gamma_hat.row(b) = sb.colwise().mean();
    for (Index f = 0; f < m; ++f) p.delta_hat(b, f) = sample_variance(sb.col(f));
  }

  for (Index b = 0; b < nb; ++b) {
    const auto& rows = members[static_cast<std::size_t>(b)];
    const Matrix sb = select_rows(s, rows);
    const double nbatch = static_cast<double>(rows.size());
    const Vector g_hat = p.gamma_hat.row(b).transpose();
    const Vector d_hat = p.delta_hat.row(b).transpose();
    const double g_bar = g_hat.mean();
    const double t2 = sample_variance(g_hat);
    const double d_mean = d_hat.mean();
    const double d_var = sample_variance(d_hat);
    // Inverse-gamma prior by moment matching; a degenerate spread collapses it to a point mass.
    const bool point_prior = !(d_var > 1e-14 * std::max(1.0, d_mean * d_mean));
    const double a_prior = point_prior ? 0.0 : (2.0 * d_var + d_mean * d_mean) / d_var;
    const double b_prior = point_prior ? 0.0 : (d_mean * d_var + d_mean * d_mean * d_mean) / d_var;

    for (Index f = 0; f < m; ++f) {
      double g_old = g_hat(f);
      double d_old = d_hat(f) > 0.0 ? d_hat(f) : std::max(d_mean, 1e-12);
      double g_new = g_old;
      double d_new = d_old;
      int iter = 0;
      while (iter < opts.max_iterations) {
        ++iter;
        g_new = (nbatch * t2 * g_hat(f) + d_old * g_bar) / (nbatch * t2 + d_old);
        if (point_prior) {
          d_new = std::max(d_mean, 1e-12);
        } else {
          const double sum2 = (sb.col(f).array() - g_new).square().sum();
          d_new = (0.5 * sum2 + b_prior) / (nbatch / 2.0 + a_prior - 1.0);
        }
        const double change = std::max(std::abs(g_new - g_old) / std::max(std::abs(g_old), 1e-12),
                                       std::abs(d_new - d_old) / std::max(d_old, 1e-12));
        g_old = g_new;
        d_old = d_new;
        if (change < opts.tolerance) break;
      }
      p.eb_iterations = std::max(p.eb_iterations, iter);
      p.gamma_star(b, f) = g_new * sd(f);
      p.delta_star(b, f) = std::sqrt(d_new);
    }
  }
  return p;
}

Matrix combat_apply(const Matrix& features, const std::vector<std::string>& batch, const Matrix& covariates,
                    const CombatParams& params) {
  const Index n = features.rows();
  const Index m = features.cols();
  if (m != params.grand_mean.size())
    throw std::invalid_argument("combat_apply: expected " + std::to_string(params.grand_mean.size()) +
                                " features, got " + std::to_string(m));
  if (static_cast<Index>(batch.size()) != n) throw std::invalid_argument("combat_apply: batch label count mismatch");
  if (covariates.cols() != params.covariate_count())
    throw std::invalid_argument("combat_apply: harmonizer was fitted with " + std::to_string(params.covariate_count()) +
                                " covariate column(s), got " + std::to_string(covariates.cols()));
  if (params.covariate_count() > 0 && covariates.rows() != n)
    throw std::invalid_argument("combat_apply: covariate row count mismatch");

  Matrix out(n, m);
  for (Index i = 0; i < n; ++i) {
    const Index b = params.batch_index(batch[static_cast<std::size_t>(i)]);
    Vector stand = params.grand_mean;
    if (params.covariate_count() > 0) stand += params.covariate_coef * covariates.row(i).transpose();
    const Vector x = features.row(i).transpose();
    out.row(i) = ((x - stand - params.gamma_star.row(b).transpose()).array() /
                      params.delta_star.row(b).transpose().array() +
                  stand.array())
                     .transpose();
  }
  return out;
}

ResidualizerParams fit_residualizer(const Matrix& features, const Matrix& covariates, const IndexSet& rows) {
  const Index c = covariates.cols();
  if (covariates.rows() != features.rows()) throw std::invalid_argument("residualize: covariate row count mismatch");
  if (static_cast<Index>(rows.size()) < c + 2)
    throw std::invalid_argument("residualize: need at least C + 2 fit rows");
  if (!covariates.allFinite()) throw DataError("residualize: non-finite covariates");
  Matrix design(static_cast<Index>(rows.size()), c + 1);
  design.col(0).setOnes();
  design.rightCols(c) = select_rows(covariates, rows);
  const Matrix coef = solve_design(design, select_rows(features, rows), "residualize");
  ResidualizerParams p;
  p.intercepts = coef.row(0).transpose();
  p.covariate_coef = coef.bottomRows(c).transpose();
  return p;
}

Matrix residualize(const Matrix& features, const Matrix& covariates, const ResidualizerParams& params) {
  if (features.cols() != params.intercepts.size()) throw std::invalid_argument("residualize: feature count mismatch");
  if (covariates.cols() != params.covariate_coef.cols())
    throw std::invalid_argument("residualize: covariate column count mismatch");
  Matrix out = features.rowwise() - params.intercepts.transpose();
  out.noalias() -= covariates * params.covariate_coef.transpose();
  return out;
}

Matrix residualize(const Matrix& features, const Matrix& covariates, const IndexSet& rows) {
  return residualize(features, covariates, fit_residualizer(features, covariates, rows));
}

double BatchDiagnostic::max_abs() const { return t.size() ? t.cwiseAbs().maxCoeff() : 0.0; }

Index BatchDiagnostic::count_above(double threshold) const {
  return static_cast<Index>((t.array().abs() > threshold).count());
}

BatchDiagnostic batch_t_diagnostic(const Matrix& features, const std::vector<std::string>& batch, const IndexSet& rows) {
  if (static_cast<Index>(batch.size()) != features.rows())
    throw std::invalid_argument("batch_t_diagnostic: batch label count mismatch");
  std::map<std::string, IndexSet> by_level;
  for (Index r : rows) by_level[batch[static_cast<std::size_t>(r)]].push_back(r);
  if (by_level.size() != 2)
    throw std::invalid_argument("batch_t_diagnostic: need exactly 2 batch levels, found " +
                                std::to_string(by_level.size()));
  BatchDiagnostic d;
  auto it = by_level.begin();
  const auto& [la, ra] = *it++;
  const auto& [lb, rb] = *it;
  if (ra.size() < 2 || rb.size() < 2)
    throw std::invalid_argument("batch_t_diagnostic: each batch needs at least 2 subjects");
  d.levels = {la, lb};
  const Matrix xa = select_rows(features, ra);
  const Matrix xb = select_rows(features, rb);
  const double na = static_cast<double>(ra.size());
  const double nb = static_cast<double>(rb.size());
  d.t.resize(features.cols());
  for (Index f = 0; f < features.cols(); ++f) {
    const double diff = xa.col(f).mean() - xb.col(f).mean();
    const double se = std::sqrt(sample_variance(xa.col(f)) / na + sample_variance(xb.col(f)) / nb);
    if (se > 0.0)
      d.t(f) = diff / se;
    else
      d.t(f) = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return d;
}

Matrix covariate_column(const std::vector<double>& values) {
  Matrix c(static_cast<Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) c(static_cast<Index>(i), 0) = values[i];
  return c;
}

}  // namespace cogmtl

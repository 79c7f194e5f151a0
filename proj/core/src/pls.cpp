#include "cogmtl/pls.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "cogmtl/errors.hpp"
#include "cogmtl/random.hpp"
#include "cogmtl/csv.hpp"

namespace cogmtl {

Matrix PlsModel::scores(const Matrix& x) const {
  if (x.cols() != x_mean.size()) throw std::invalid_argument("PLS: block width mismatch");
  return (x.rowwise() - x_mean.transpose()) * rotations;
}

Matrix PlsModel::remove_components(const Matrix& x) const {
  if (components() == 0) return x;
  return x - scores(x) * x_loadings.transpose();
}

PlsModel pls_fit(const Matrix& x, const Matrix& y, Index k) {
  const Index n = x.rows();
  const Index m = x.cols();
  if (y.rows() != n) throw std::invalid_argument("pls_fit: X and Y row counts differ");
  if (y.cols() < 1) throw std::invalid_argument("pls_fit: empty response");
  if (k < 1 || k > std::min(n - 1, m))
    throw std::invalid_argument("pls_fit: component count " + std::to_string(k) + " outside [1, min(N-1, M_b) = " +
                                std::to_string(std::min(n - 1, m)) + "]");
  PlsModel model;
  model.x_mean = x.colwise().mean().transpose();
  model.y_mean = y.colwise().mean().transpose();
  Matrix xk = x.rowwise() - model.x_mean.transpose();
  Matrix yk = y.rowwise() - model.y_mean.transpose();
  for (Index r = 0; r < y.cols(); ++r)
    if (!(yk.col(r).squaredNorm() > 1e-24 * static_cast<double>(n)))
      throw DataError("pls_fit: response column " + std::to_string(r) + " has zero variance");
  const double y_total = yk.squaredNorm();

  model.x_weights.resize(m, k);
  model.x_loadings.resize(m, k);
  model.y_loadings.resize(y.cols(), k);
  model.y_explained.resize(k);
  Matrix scores(n, k);

  for (Index a = 0; a < k; ++a) {
    Index start = 0;
    yk.colwise().squaredNorm().maxCoeff(&start);
    Vector u = yk.col(start);
    Vector w, t, q;
    for (int iter = 0; iter < 500; ++iter) {
      w = xk.transpose() * u;
      const double wn = w.norm();
      if (!(wn > 1e-300)) throw NumericalError("pls_fit: X block exhausted after " + std::to_string(a) + " components");
      w /= wn;
      t = xk * w;
      const double tt = t.squaredNorm();
      if (!(tt > 1e-300)) throw NumericalError("pls_fit: degenerate score vector at component " + std::to_string(a + 1));
      q = yk.transpose() * t / tt;
      if (yk.cols() == 1) break;
      const double qq = q.squaredNorm();
      if (!(qq > 1e-300)) break;
      const Vector u_next = yk * q / qq;
      const double delta = (u_next - u).norm() / std::max(u_next.norm(), 1e-300);
      u = u_next;
      if (delta < 1e-12) break;
    }
    const double tt = t.squaredNorm();
    const Vector p = xk.transpose() * t / tt;
    xk -= t * p.transpose();
    yk -= t * q.transpose();
    model.x_weights.col(a) = w;
    model.x_loadings.col(a) = p;
    model.y_loadings.col(a) = q;
    scores.col(a) = t;
    model.y_explained(a) = y_total > 0.0 ? q.squaredNorm() * tt / y_total : 0.0;
  }
  const Matrix ptw = model.x_loadings.transpose() * model.x_weights;
  model.rotations = model.x_weights * ptw.partialPivLu().solve(Matrix::Identity(k, k));
  return model;
}

Matrix batch_response(const std::vector<std::string>& batch, const std::vector<double>* age) {
  const std::set<std::string> level_set(batch.begin(), batch.end());
  const std::vector<std::string> levels(level_set.begin(), level_set.end());
  if (levels.size() < 2) throw DataError("PLS adaptation needs at least 2 batch levels in the fit rows");
  const Index n = static_cast<Index>(batch.size());
  const Index cols = static_cast<Index>(levels.size()) - 1 + (age != nullptr ? 1 : 0);
  Matrix y(n, cols);
  for (Index i = 0; i < n; ++i) {
    const auto& b = batch[static_cast<std::size_t>(i)];
    for (std::size_t l = 1; l < levels.size(); ++l) y(i, static_cast<Index>(l) - 1) = b == levels[l] ? 1.0 : -1.0;
  }
  if (age != nullptr) {
    if (static_cast<Index>(age->size()) != n) throw std::invalid_argument("batch_response: age length mismatch");
    const Eigen::Map<const Vector> a(age->data(), n);
    const double mean = a.mean();
    const double sd = n > 1 ? std::sqrt((a.array() - mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    y.col(cols - 1) = (a.array() - mean) / (sd > 0.0 ? sd : 1.0);
  }
  return y;
}

Matrix domain_adapt(const Matrix& x_block, const std::vector<std::string>& batch, const std::vector<double>* age,
                    Index k) {
  return pls_fit(x_block, batch_response(batch, age), k).remove_components(x_block);
}

IndexSet RegionBlocks::members(Index block) const {
  IndexSet out;
  for (std::size_t j = 0; j < block_of.size(); ++j)
    if (block_of[j] == block) out.push_back(static_cast<Index>(j));
  return out;
}

void RegionBlocks::validate(Index feature_count) const {
  if (static_cast<Index>(block_of.size()) != feature_count)
    throw DataError("block map covers " + std::to_string(block_of.size()) + " features, cohort has " +
                    std::to_string(feature_count));
  std::vector<Index> sizes(block_names.size(), 0);
  for (Index b : block_of) {
    if (b < 0 || b >= block_count()) throw DataError("block map has an out-of-range block index");
    ++sizes[static_cast<std::size_t>(b)];
  }
  for (std::size_t b = 0; b < sizes.size(); ++b)
    if (sizes[b] == 0) throw DataError("block '" + block_names[b] + "' has no features");
}

RegionBlocks contiguous_blocks(Index feature_count, Index count) {
  if (feature_count < 1 || count < 1 || count > feature_count)
    throw std::invalid_argument("contiguous_blocks: need 1 <= count <= feature_count");
  RegionBlocks blocks;
  blocks.block_of.resize(static_cast<std::size_t>(feature_count));
  for (Index b = 0; b < count; ++b) {
    const Index lo = b * feature_count / count;
    const Index hi = (b + 1) * feature_count / count;
    for (Index j = lo; j < hi; ++j) blocks.block_of[static_cast<std::size_t>(j)] = b;
    char name[32];
    std::snprintf(name, sizeof name, "block_%02td", b + 1);
    blocks.block_names.emplace_back(name);
  }
  return blocks;
}

RegionBlocks load_block_map(const std::filesystem::path& path, const std::vector<std::string>& feature_names) {
  const auto table = csv::read(path);
  if (table.header.size() != 2 || table.header[0] != "feature_name" || table.header[1] != "block_name")
    throw DataError(path.string() + ":" + std::to_string(table.header_line) +
                    ": header must be 'feature_name,block_name'");
  std::unordered_map<std::string, Index> feature_index;
  for (std::size_t j = 0; j < feature_names.size(); ++j) feature_index.emplace(feature_names[j], static_cast<Index>(j));
  RegionBlocks blocks;
  blocks.block_of.assign(feature_names.size(), -1);
  std::unordered_map<std::string, Index> block_index;
  for (const auto& row : table.rows) {
    const auto it = feature_index.find(row.cells[0]);
    if (it == feature_index.end())
      throw DataError(path.string() + ":" + std::to_string(row.line) + ": unknown feature '" + row.cells[0] + "'");
    if (row.cells[1].empty()) throw DataError(path.string() + ":" + std::to_string(row.line) + ": empty block name");
    auto& slot = blocks.block_of[static_cast<std::size_t>(it->second)];
    if (slot != -1)
      throw DataError(path.string() + ":" + std::to_string(row.line) + ": feature '" + row.cells[0] +
                      "' assigned twice");
    auto [bit, inserted] = block_index.emplace(row.cells[1], static_cast<Index>(blocks.block_names.size()));
    if (inserted) blocks.block_names.push_back(row.cells[1]);
    slot = bit->second;
  }
  for (std::size_t j = 0; j < feature_names.size(); ++j)
    if (blocks.block_of[j] == -1)
      throw DataError(path.string() + ": feature '" + feature_names[j] + "' is not assigned to a block");
  blocks.validate(static_cast<Index>(feature_names.size()));
  return blocks;
}

void write_block_map(const RegionBlocks& blocks, const std::vector<std::string>& feature_names,
                     const std::filesystem::path& path, const std::vector<std::string>& preamble) {
  blocks.validate(static_cast<Index>(feature_names.size()));
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  for (const auto& p : preamble) out << "# " << p << '\n';
  out << "feature_name,block_name\n";
  for (std::size_t j = 0; j < feature_names.size(); ++j)
    out << csv::quote_if_needed(feature_names[j]) << ','
        << csv::quote_if_needed(blocks.block_names[static_cast<std::size_t>(blocks.block_of[j])]) << '\n';
}

Index effective_components(Index k, Index block_width, Index rows) {
  return std::max<Index>(0, std::min({k, block_width - 1, rows - 1}));
}

Matrix DomainAdapter::apply(const Matrix& x) const {
  if (static_cast<Index>(blocks.block_of.size()) != x.cols())
    throw std::invalid_argument("DomainAdapter: feature count mismatch");
  Matrix out = x;
  for (Index b = 0; b < blocks.block_count(); ++b) {
    const auto& model = models[static_cast<std::size_t>(b)];
    if (model.components() == 0) continue;
    const IndexSet cols = blocks.members(b);
    const Matrix adapted = model.remove_components(select_cols(x, cols));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(cols[j]) = adapted.col(static_cast<Index>(j));
  }
  return out;
}

DomainAdapter fit_domain_adapter(const Matrix& x, const std::vector<std::string>& batch, const std::vector<double>* age,
                                 const RegionBlocks& blocks, Index k) {
  blocks.validate(x.cols());
  if (k < 1) throw std::invalid_argument("fit_domain_adapter: component count must be positive");
  DomainAdapter adapter;
  adapter.blocks = blocks;
  adapter.response = age != nullptr ? PlsResponse::BatchAndAge : PlsResponse::BatchOnly;
  adapter.requested_components = k;
  const Matrix y = batch_response(batch, age);
  for (Index b = 0; b < blocks.block_count(); ++b) {
    const IndexSet cols = blocks.members(b);
    const Index keff = effective_components(k, static_cast<Index>(cols.size()), x.rows());
    PlsModel model;
    if (keff > 0) {
      model = pls_fit(select_cols(x, cols), y, keff);
    } else {
      model.x_mean = select_cols(x, cols).colwise().mean().transpose();
      model.x_weights.resize(static_cast<Index>(cols.size()), 0);
      model.x_loadings.resize(static_cast<Index>(cols.size()), 0);
      model.rotations.resize(static_cast<Index>(cols.size()), 0);
    }
    model.response = adapter.response;
    adapter.models.push_back(std::move(model));
  }
  return adapter;
}

namespace {

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma) {
  const Vector na = a.rowwise().squaredNorm();
  const Vector nb = b.rowwise().squaredNorm();
  Matrix d = -2.0 * a * b.transpose();
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return (-gamma * d.array().max(0.0)).exp().matrix();
}

}  // namespace

Vector KernelRidge::predict(const Matrix& x) const {
  if (x.cols() != support.cols()) throw std::invalid_argument("KernelRidge: feature count mismatch");
  return (rbf_kernel(x, support, gamma) * dual).array() + y_mean;
}

KernelRidge fit_kernel_ridge(const Matrix& x, const Vector& y, double gamma, double ridge) {
  if (x.rows() != y.size()) throw std::invalid_argument("fit_kernel_ridge: X/y row mismatch");
  if (!(gamma > 0.0) || !(ridge > 0.0)) throw std::invalid_argument("fit_kernel_ridge: gamma and ridge must be positive");
  KernelRidge model;
  model.support = x;
  model.gamma = gamma;
  model.ridge = ridge;
  model.y_mean = y.mean();
  Matrix k = rbf_kernel(x, x, gamma);
  k.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalError("fit_kernel_ridge: kernel system is not positive definite");
  model.dual = llt.solve((y.array() - model.y_mean).matrix());
  return model;
}

Matrix StackedModel::block_predictions(const Matrix& x) const {
  Matrix p(x.rows(), blocks.block_count());
  for (Index b = 0; b < blocks.block_count(); ++b)
    p.col(b) = base[static_cast<std::size_t>(b)].predict(select_cols(x, blocks.members(b)));
  return p;
}

Vector StackedModel::predict(const Matrix& x) const {
  return cogmtl::predict(combiner, combiner_scaler.apply(block_predictions(x)));
}

std::vector<Index> stacking_folds(Index rows, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stacking_folds: need at least 2 folds");
  std::vector<Index> perm(static_cast<std::size_t>(rows));
  std::iota(perm.begin(), perm.end(), Index{0});
  auto rng = make_rng(seed, {0x57ac4ULL});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> fold_of(static_cast<std::size_t>(rows));
  for (std::size_t i = 0; i < perm.size(); ++i) fold_of[static_cast<std::size_t>(perm[i])] = static_cast<Index>(i % static_cast<std::size_t>(folds));
  return fold_of;
}

namespace {

double block_gamma(const StackingOptions& opts, Index width) {
  return opts.kernel_gamma > 0.0 ? opts.kernel_gamma : 1.0 / static_cast<double>(width);
}

void check_stacking_input(const Matrix& x, const Vector& y, const RegionBlocks& blocks, const StackingOptions& opts) {
  blocks.validate(x.cols());
  if (blocks.block_count() < 2) throw std::invalid_argument("fit_stacked: need at least 2 blocks");
  if (x.rows() != y.size()) throw std::invalid_argument("fit_stacked: X/y row mismatch");
  if (!y.allFinite()) throw std::invalid_argument("fit_stacked: non-finite targets");
  if (x.rows() < 5) throw std::invalid_argument("fit_stacked: each block needs at least 5 training rows");
  if (opts.internal_folds < 2) throw std::invalid_argument("fit_stacked: need at least 2 internal folds");
}

}  // namespace

Matrix out_of_fold_block_predictions(const Matrix& x, const Vector& y, const RegionBlocks& blocks,
                                     const StackingOptions& opts, const std::vector<Index>& fold_of) {
  check_stacking_input(x, y, blocks, opts);
  if (static_cast<Index>(fold_of.size()) != x.rows()) throw std::invalid_argument("fold assignment length mismatch");
  const Index folds = *std::max_element(fold_of.begin(), fold_of.end()) + 1;
  Matrix oof(x.rows(), blocks.block_count());
  for (Index f = 0; f < folds; ++f) {
    IndexSet train, test;
    for (Index i = 0; i < x.rows(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    if (test.empty()) continue;
    if (train.size() < 2) throw std::invalid_argument("fit_stacked: internal fold leaves fewer than 2 training rows");
    const Vector y_train = select_rows(y, train);
    for (Index b = 0; b < blocks.block_count(); ++b) {
      const Matrix xb = select_cols(x, blocks.members(b));
      const auto base = fit_kernel_ridge(select_rows(xb, train), y_train, block_gamma(opts, xb.cols()), opts.ridge);
      const Vector pred = base.predict(select_rows(xb, test));
      for (std::size_t i = 0; i < test.size(); ++i) oof(test[i], b) = pred(static_cast<Index>(i));
    }
  }
  return oof;
}

StackedModel fit_stacked(const Matrix& x, const Vector& y, const RegionBlocks& blocks, const StackingOptions& opts) {
  check_stacking_input(x, y, blocks, opts);
  const auto folds = std::min<Index>(opts.internal_folds, x.rows());
  const auto fold_of = stacking_folds(x.rows(), static_cast<int>(folds), opts.seed);
  const Matrix oof = out_of_fold_block_predictions(x, y, blocks, opts, fold_of);

  StackedModel model;
  model.blocks = blocks;
  model.combiner_scaler = fit_standardizer(oof);
  const Matrix z = model.combiner_scaler.apply(oof);

  // Combiner lambda by CV over the same internal folds; ties go to the larger lambda.
  const auto lambdas = lambda_path(elastic_net_lambda_max(z, y, opts.combiner_alpha), opts.combiner_lambdas, 1e-3);
  std::vector<double> sse(lambdas.size(), 0.0);
  for (Index f = 0; f < folds; ++f) {
    IndexSet train, test;
    for (Index i = 0; i < z.rows(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    if (test.empty() || train.size() < 2) continue;
    const auto path = fit_elastic_net_path(select_rows(z, train), select_rows(y, train), lambdas, opts.combiner_alpha);
    const Matrix zt = select_rows(z, test);
    const Vector yt = select_rows(y, test);
    for (std::size_t k = 0; k < lambdas.size(); ++k) sse[k] += (predict(path[k], zt) - yt).squaredNorm();
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < lambdas.size(); ++k)
    if (sse[k] < sse[best]) best = k;
  model.combiner = fit_elastic_net(z, y, lambdas[best], opts.combiner_alpha);

  for (Index b = 0; b < blocks.block_count(); ++b) {
    const Matrix xb = select_cols(x, blocks.members(b));
    model.base.push_back(fit_kernel_ridge(xb, y, block_gamma(opts, xb.cols()), opts.ridge));
  }
  return model;
}

}  // namespace cogmtl

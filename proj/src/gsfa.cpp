#include "higsfa/gsfa.hpp"

#include <algorithm>
#include <cmath>

#include "higsfa/kernels.hpp"

namespace higsfa::gsfa {

namespace {

void mirror_upper(Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = i + 1; j < m.cols(); ++j) m(j, i) = m(i, j);
}

struct GroupSums {
  std::vector<Vector> sum;    // per group: sum of rows
  std::vector<Matrix> outer;  // per group: sum of row outer products (upper)
};

GroupSums group_sums(const Matrix& xc, const graphs::GroupStructure& s) {
  const Index dim = xc.cols();
  const std::size_t n_groups = s.group_sizes.size();
  GroupSums out;
  out.sum.assign(n_groups, Vector::Zero(dim));
  out.outer.assign(n_groups, Matrix::Zero(dim, dim));
  for (Index n = 0; n < xc.rows(); ++n) {
    const int l = s.group_of_sample[static_cast<std::size_t>(n)];
    const double* row = xc.data() + n * dim;
    kernels::axpy(1.0, row, out.sum[l].data(), dim);
    kernels::syr_upper(1.0, row, dim, out.outer[l].data(), dim);
  }
  return out;
}

// Adds sum over both edge orientations of gamma * d d^T (upper triangle)
// for centered data xc.
void accumulate_diff_outer(const Matrix& xc, const graphs::TrainingGraph& g, Matrix& acc) {
  const Index dim = xc.cols();
  if (!g.parts.empty()) {
    for (const auto& p : g.parts) accumulate_diff_outer(xc, p, acc);
    return;
  }
  if (g.structure) {
    const auto& s = *g.structure;
    const GroupSums sums = group_sums(xc, s);
    if (s.kind == graphs::GroupKind::clustered) {
      // Ordered within-class pairs: sum (x'-x)(x'-x)^T = 2 N_s G_s - 2 S_s S_s^T.
      for (std::size_t l = 0; l < s.group_sizes.size(); ++l) {
        const double size = s.group_sizes[l];
        if (size < 2) continue;
        const double w = 1.0 / (size - 1.0);
        acc += (2.0 * w * size) * sums.outer[l];
        kernels::syr_upper(-2.0 * w, sums.sum[l].data(), dim, acc.data(), dim);
      }
    } else {
      for (std::size_t l = 0; l + 1 < s.group_sizes.size(); ++l) {
        const double na = s.group_sizes[l];
        const double nb = s.group_sizes[l + 1];
        acc += (2.0 * nb) * sums.outer[l] + (2.0 * na) * sums.outer[l + 1];
        kernels::syr2_upper(-2.0, sums.sum[l].data(), sums.sum[l + 1].data(), dim, acc.data(),
                            dim);
      }
    }
    return;
  }
  Vector diff(dim);
  for (const auto& e : g.edges) {
    const double* a = xc.data() + static_cast<Index>(e.i) * dim;
    const double* b = xc.data() + static_cast<Index>(e.j) * dim;
    for (Index k = 0; k < dim; ++k) diff[k] = b[k] - a[k];
    kernels::syr_upper(2.0 * e.weight, diff.data(), dim, acc.data(), dim);
  }
}

void check_graph_matches(const Matrix& x, const graphs::TrainingGraph& g) {
  if (x.rows() != g.n_samples)
    throw ConfigError("data has " + std::to_string(x.rows()) + " samples but the graph expects " +
                      std::to_string(g.n_samples));
}

void fix_row_signs(Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    Index arg = 0;
    m.row(r).cwiseAbs().maxCoeff(&arg);
    if (m(r, arg) < 0.0) m.row(r) = -m.row(r);
  }
}

}  // namespace

Moments weighted_moments(const Matrix& x, const graphs::TrainingGraph& g) {
  check_graph_matches(x, g);
  if (x.rows() < 2) throw ConfigError("moments need at least 2 samples");
  const Index dim = x.cols();
  const Index n = x.rows();

  Moments m;
  m.mean = Vector::Zero(dim);
  for (Index r = 0; r < n; ++r)
    kernels::axpy(g.vertex_weights[r], x.data() + r * dim, m.mean.data(), dim);
  m.mean /= g.vertex_normalizer;

  // Centering before any accumulation keeps the difference sums stable even
  // when group sums are expanded algebraically.
  Matrix xc = x;
  xc.rowwise() -= m.mean.transpose();

  m.cov = Matrix::Zero(dim, dim);
  for (Index r = 0; r < n; ++r)
    kernels::syr_upper(g.vertex_weights[r], xc.data() + r * dim, dim, m.cov.data(), dim);
  m.cov /= g.vertex_normalizer;
  mirror_upper(m.cov);

  m.diff_cov = Matrix::Zero(dim, dim);
  accumulate_diff_outer(xc, g, m.diff_cov);
  m.diff_cov /= g.edge_normalizer;
  mirror_upper(m.diff_cov);
  return m;
}

GSFAModel train_gsfa(const Matrix& x, const graphs::TrainingGraph& g, int n_features,
                     const TrainOptions& opts) {
  if (n_features < 1) throw ConfigError("n_features must be positive");
  const Moments mom = weighted_moments(x, g);
  const Index dim = x.cols();

  Eigen::SelfAdjointEigenSolver<Matrix> cov_eig(mom.cov);
  if (cov_eig.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
  const Vector& evals = cov_eig.eigenvalues();  // ascending
  const double largest = evals[dim - 1];
  if (!(largest > 0.0)) throw NumericError("data covariance has no positive directions");

  int rank = 0;
  for (Index k = 0; k < dim; ++k)
    if (evals[k] > opts.rank_rtol * largest) ++rank;
  if (n_features > rank) {
    if (!opts.cap_features_to_rank)
      throw NumericError("requested " + std::to_string(n_features) +
                         " features but achievable rank is " + std::to_string(rank));
    n_features = rank;
  }

  // Whitening restricted to the retained directions.
  Matrix whiten(dim, rank);
  for (int k = 0; k < rank; ++k) {
    const Index src = dim - rank + k;
    whiten.col(k) = cov_eig.eigenvectors().col(src) / std::sqrt(evals[src]);
  }

  const Matrix whitened_diff = whiten.transpose() * mom.diff_cov * whiten;
  Eigen::SelfAdjointEigenSolver<Matrix> diff_eig(whitened_diff);
  if (diff_eig.info() != Eigen::Success)
    throw NumericError("difference covariance eigendecomposition failed");

  GSFAModel model;
  model.input_dim = static_cast<int>(dim);
  model.n_features = n_features;
  model.input_offset = mom.mean;
  model.rank_used = rank;
  model.projection = (whiten * diff_eig.eigenvectors().leftCols(n_features)).transpose();
  fix_row_signs(model.projection);
  model.deltas = diff_eig.eigenvalues().head(n_features).cwiseMax(0.0);
  return model;
}

Matrix extract_gsfa(const GSFAModel& m, const Matrix& x) {
  if (x.cols() != m.input_dim) throw ConfigError("input dimension mismatch in extract");
  return (x.rowwise() - m.input_offset.transpose()) * m.projection.transpose();
}

Vector extract_gsfa(const GSFAModel& m, const Vector& x) {
  if (x.size() != m.input_dim) throw ConfigError("input dimension mismatch in extract");
  return m.projection * (x - m.input_offset);
}

DeltaReport delta_of(const Matrix& y, const graphs::TrainingGraph& g) {
  check_graph_matches(y, g);
  const Index n_feats = y.cols();

  Vector mean = Vector::Zero(n_feats);
  for (Index r = 0; r < y.rows(); ++r)
    kernels::axpy(g.vertex_weights[r], y.data() + r * n_feats, mean.data(), n_feats);
  mean /= g.vertex_normalizer;

  Matrix yc = y;
  yc.rowwise() -= mean.transpose();

  Vector var = Vector::Zero(n_feats);
  for (Index r = 0; r < y.rows(); ++r) {
    const double w = g.vertex_weights[r];
    const double* row = yc.data() + r * n_feats;
    for (Index j = 0; j < n_feats; ++j) var[j] += w * row[j] * row[j];
  }
  var /= g.vertex_normalizer;

  Matrix acc = Matrix::Zero(n_feats, n_feats);
  accumulate_diff_outer(yc, g, acc);

  DeltaReport report;
  report.deltas = Vector::Zero(n_feats);
  report.zero_variance.assign(n_feats, false);
  report.graph_id = g.id;
  report.n_samples = g.n_samples;
  for (Index j = 0; j < n_feats; ++j) {
    const double scale = std::max(1.0, y.col(j).cwiseAbs().maxCoeff());
    if (var[j] <= 1e-24 * scale * scale) {
      report.zero_variance[j] = true;
      report.deltas[j] = 0.0;
    } else {
      report.deltas[j] = std::max(0.0, acc(j, j) / (g.edge_normalizer * var[j]));
    }
  }
  return report;
}

PCAModel train_pca(const Matrix& x, int d) {
  if (x.rows() < 2) throw ConfigError("PCA needs at least 2 samples");
  if (d < 0 || d > x.cols()) throw ConfigError("PCA dimension out of range");
  const Index dim = x.cols();

  PCAModel model;
  model.mean = x.colwise().mean();
  if (d == 0) {
    model.components = Matrix(0, dim);
    model.variances = Vector(0);
    return model;
  }

  Matrix xc = x;
  xc.rowwise() -= model.mean.transpose();
  Matrix cov = Matrix::Zero(dim, dim);
  for (Index r = 0; r < xc.rows(); ++r)
    kernels::syr_upper(1.0, xc.data() + r * dim, dim, cov.data(), dim);
  cov /= static_cast<double>(x.rows() - 1);
  mirror_upper(cov);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
  const Vector& evals = eig.eigenvalues();
  const double largest = std::max(evals[dim - 1], 0.0);

  int rank = 0;
  for (Index k = 0; k < dim; ++k)
    if (evals[k] > 1e-12 * largest && evals[k] > 0.0) ++rank;
  if (d > rank)
    throw NumericError("requested " + std::to_string(d) + " principal components but rank is " +
                       std::to_string(rank));

  model.components = Matrix(d, dim);
  model.variances = Vector(d);
  for (int k = 0; k < d; ++k) {
    model.components.row(k) = eig.eigenvectors().col(dim - 1 - k).transpose();
    model.variances[k] = evals[dim - 1 - k];
  }
  fix_row_signs(model.components);
  return model;
}

Matrix apply_pca(const PCAModel& m, const Matrix& x) {
  if (x.cols() != m.mean.size()) throw ConfigError("input dimension mismatch in PCA");
  return (x.rowwise() - m.mean.transpose()) * m.components.transpose();
}

Vector apply_pca(const PCAModel& m, const Vector& x) {
  if (x.size() != m.mean.size()) throw ConfigError("input dimension mismatch in PCA");
  return m.components * (x - m.mean);
}

Matrix invert_pca(const PCAModel& m, const Matrix& h) {
  if (h.cols() != m.components.rows()) throw ConfigError("component count mismatch in PCA");
  Matrix out = h * m.components;
  out.rowwise() += m.mean.transpose();
  return out;
}

Vector invert_pca(const PCAModel& m, const Vector& h) {
  if (h.size() != m.components.rows()) throw ConfigError("component count mismatch in PCA");
  return m.components.transpose() * h + m.mean;
}

}  // namespace higsfa::gsfa

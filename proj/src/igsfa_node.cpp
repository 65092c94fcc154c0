#include "higsfa/igsfa_node.hpp"

#include <algorithm>
#include <cmath>

namespace higsfa::igsfa {

namespace {

// Ordinary least squares of targets on [features | 1]; returns (map, offset)
// with map of shape targets.cols() x features.cols().
std::pair<Matrix, Vector> fit_affine(const Matrix& features, const Matrix& targets) {
  const Index n = features.rows();
  const Index j = features.cols();
  Eigen::MatrixXd design(n, j + 1);
  design.leftCols(j) = features;
  design.col(j).setOnes();
  const Eigen::MatrixXd theta = design.colPivHouseholderQr().solve(Eigen::MatrixXd(targets));
  Matrix map = theta.topRows(j).transpose();
  Vector offset = theta.row(j).transpose();
  return {std::move(map), std::move(offset)};
}

Matrix slow_part_scaled(const IGSFANodeModel& m, const Matrix& slow_raw) {
  if (m.n_slow == 0) return Matrix(slow_raw.rows(), 0);
  if (m.scaling == ScalingMode::qr) return slow_raw * m.r.transpose();
  return slow_raw * m.lambda.asDiagonal();
}

Matrix slow_reconstruction(const IGSFANodeModel& m, const Matrix& slow_scaled) {
  Matrix a(slow_scaled.rows(), m.input_dim);
  if (m.n_slow == 0) {
    a.setZero();
  } else if (m.scaling == ScalingMode::qr) {
    a = slow_scaled * m.q.transpose();
  } else {
    a = slow_scaled * m.lambda.cwiseInverse().asDiagonal() * m.ls_map.transpose();
  }
  a.rowwise() += m.ls_offset.transpose();
  return a;
}

}  // namespace

IGSFANodeModel train_node(const Matrix& x, const graphs::TrainingGraph& g, int output_dim,
                          const SlowSelector& selector, const expansions::ExpansionSpec& expansion,
                          ScalingMode scaling) {
  const Index n = x.rows();
  const int input_dim = static_cast<int>(x.cols());
  if (output_dim < 1) throw ConfigError("node output dimension must be positive");
  if (n <= output_dim)
    throw ConfigError("node needs more samples than output dimensions (" + std::to_string(n) +
                      " <= " + std::to_string(output_dim) + ")");
  const int expanded_dim = expansion.output_dim(input_dim);
  if (output_dim > expanded_dim)
    throw ConfigError("output dimension " + std::to_string(output_dim) +
                      " exceeds expanded dimension " + std::to_string(expanded_dim));
  if (!selector.delta_threshold && !selector.fixed_count)
    throw ConfigError("slow-part selector needs a delta threshold or a fixed count");

  IGSFANodeModel m;
  m.input_dim = input_dim;
  m.expanded_dim = expanded_dim;
  m.output_dim = output_dim;
  m.selector = selector;
  m.expansion = expansion;
  m.scaling = scaling;

  m.input_mean = x.colwise().mean();
  Matrix xc = x;
  xc.rowwise() -= m.input_mean.transpose();

  const Matrix z = expansion.expand(xc);

  // The expansion can make directions collinear (e.g. squares of two-valued
  // inputs); the achievable rank caps the feature count instead of failing.
  const int requested = std::min(expanded_dim, output_dim);
  gsfa::TrainOptions opts;
  opts.cap_features_to_rank = true;
  m.gsfa = gsfa::train_gsfa(z, g, requested, opts);
  const int available = m.gsfa.n_features;

  int n_slow = 0;
  if (selector.fixed_count) {
    n_slow = std::min(*selector.fixed_count, available);
  } else {
    const double threshold = *selector.delta_threshold;
    while (n_slow < available && m.gsfa.deltas[n_slow] < threshold) ++n_slow;
  }
  m.n_slow = n_slow;
  if (n_slow == output_dim)
    m.warnings.push_back("slow part fills all " + std::to_string(output_dim) +
                         " output dimensions; no reconstructive part remains");

  const Matrix slow_all = gsfa::extract_gsfa(m.gsfa, z);
  const Matrix slow_raw = slow_all.leftCols(n_slow);

  if (n_slow > 0) {
    auto [map, offset] = fit_affine(slow_raw, xc);
    m.ls_map = std::move(map);
    m.ls_offset = std::move(offset);
  } else {
    m.ls_map = Matrix(input_dim, 0);
    m.ls_offset = Vector::Zero(input_dim);
  }

  if (scaling == ScalingMode::qr) {
    if (n_slow > 0) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(m.ls_map));
      Eigen::MatrixXd thin_q =
          qr.householderQ() * Eigen::MatrixXd::Identity(input_dim, n_slow);
      Eigen::MatrixXd thin_r =
          qr.matrixQR().topRows(n_slow).triangularView<Eigen::Upper>();
      // Deterministic factor: non-negative diagonal of R.
      for (int k = 0; k < n_slow; ++k) {
        if (thin_r(k, k) < 0.0) {
          thin_r.row(k) = -thin_r.row(k);
          thin_q.col(k) = -thin_q.col(k);
        }
      }
      m.q = thin_q;
      m.r = thin_r;
    } else {
      m.q = Matrix(input_dim, 0);
      m.r = Matrix(0, 0);
    }
  } else {
    m.lambda = Vector(n_slow);
    for (int k = 0; k < n_slow; ++k) m.lambda[k] = m.ls_map.col(k).norm();
    const double max_scale = n_slow > 0 ? m.lambda.maxCoeff() : 0.0;
    if (max_scale <= 0.0) {
      // Slow features that explain nothing still must stay alive.
      m.scale_floor = 1.0;
      m.lambda.setConstant(1.0);
    } else {
      m.scale_floor = 1e-6 * max_scale;
      m.lambda = m.lambda.cwiseMax(m.scale_floor);
    }
  }

  const Matrix slow_scaled = slow_part_scaled(m, slow_raw);
  const Matrix approx = slow_reconstruction(m, slow_scaled);
  const Matrix residual = xc - approx;

  const int n_recon = output_dim - n_slow;
  try {
    m.residual_pca = gsfa::train_pca(residual, n_recon);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + "; reduce the node output dimension");
  }
  return m;
}

Matrix extract_node(const IGSFANodeModel& m, const Matrix& x) {
  if (x.cols() != m.input_dim) throw ConfigError("input dimension mismatch in node extraction");
  Matrix xc = x;
  xc.rowwise() -= m.input_mean.transpose();
  const Matrix z = m.expansion.expand(xc);
  const Matrix slow_raw = gsfa::extract_gsfa(m.gsfa, z).leftCols(m.n_slow);
  const Matrix slow_scaled = slow_part_scaled(m, slow_raw);

  Matrix y(x.rows(), m.output_dim);
  y.leftCols(m.n_slow) = slow_scaled;
  if (m.n_slow < m.output_dim) {
    const Matrix residual = xc - slow_reconstruction(m, slow_scaled);
    y.rightCols(m.output_dim - m.n_slow) = gsfa::apply_pca(m.residual_pca, residual);
  }
  return y;
}

Vector extract_node(const IGSFANodeModel& m, const Vector& x) {
  Matrix batch(1, x.size());
  batch.row(0) = x.transpose();
  return extract_node(m, batch).row(0).transpose();
}

Matrix reconstruct_node(const IGSFANodeModel& m, const Matrix& y) {
  if (y.cols() != m.output_dim) throw ConfigError("feature dimension mismatch in reconstruction");
  const Matrix slow_scaled = y.leftCols(m.n_slow);
  Matrix x = slow_reconstruction(m, slow_scaled);
  if (m.n_slow < m.output_dim)
    x += gsfa::invert_pca(m.residual_pca, Matrix(y.rightCols(m.output_dim - m.n_slow)));
  x.rowwise() += m.input_mean.transpose();
  return x;
}

Vector reconstruct_node(const IGSFANodeModel& m, const Vector& y) {
  Matrix batch(1, y.size());
  batch.row(0) = y.transpose();
  return reconstruct_node(m, batch).row(0).transpose();
}

gsfa::DeltaReport node_delta_report(const IGSFANodeModel& m, const Matrix& x,
                                    const graphs::TrainingGraph& g) {
  return gsfa::delta_of(extract_node(m, x), g);
}

NodeSignals compute_signals(const IGSFANodeModel& m, const Matrix& x) {
  if (x.cols() != m.input_dim) throw ConfigError("input dimension mismatch in node signals");
  NodeSignals s;
  Matrix xc = x;
  xc.rowwise() -= m.input_mean.transpose();
  s.expanded = m.expansion.expand(xc);
  s.slow_raw = gsfa::extract_gsfa(m.gsfa, s.expanded).leftCols(m.n_slow);
  s.slow_scaled = slow_part_scaled(m, s.slow_raw);
  s.slow_approx = slow_reconstruction(m, s.slow_scaled);
  s.residual = xc - s.slow_approx;
  if (m.n_slow < m.output_dim)
    s.reconstructive = gsfa::apply_pca(m.residual_pca, s.residual);
  else
    s.reconstructive = Matrix(x.rows(), 0);
  s.output = Matrix(x.rows(), m.output_dim);
  s.output.leftCols(m.n_slow) = s.slow_scaled;
  s.output.rightCols(m.output_dim - m.n_slow) = s.reconstructive;
  return s;
}

}  // namespace higsfa::igsfa

#include "higsfa/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace higsfa::supervised {

namespace {

Vector log_posteriors(const SoftEstimatorModel& m, const Vector& y) {
  Vector logp(static_cast<Index>(m.classes.size()));
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    const auto& cls = m.classes[c];
    const Vector centered = y - cls.mean;
    logp[static_cast<Index>(c)] =
        cls.log_norm - 0.5 * centered.dot(cls.precision * centered);
  }
  return logp;
}

}  // namespace

SoftEstimatorModel train_soft_estimator(const Matrix& y, const std::vector<double>& labels,
                                        int n_classes, double shrinkage) {
  const Index n = y.rows();
  const int dim = static_cast<int>(y.cols());
  if (static_cast<Index>(labels.size()) != n) throw ConfigError("label count mismatch");
  if (n_classes < 1) throw ConfigError("need at least one class");
  if (n / n_classes < 2 * dim)
    throw ConfigError("each of the " + std::to_string(n_classes) + " classes needs at least " +
                      std::to_string(2 * dim) + " samples, have " + std::to_string(n / n_classes));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return labels[a] < labels[b]; });

  const Index base = n / n_classes;
  const Index remainder = n % n_classes;

  SoftEstimatorModel model;
  model.n_features = dim;
  model.shrinkage = shrinkage;

  Index pos = 0;
  for (int c = 0; c < n_classes; ++c) {
    const Index size = base + (c < remainder ? 1 : 0);
    GaussianClass cls;
    cls.prior = static_cast<double>(size) / static_cast<double>(n);

    double label_sum = 0.0;
    cls.mean = Vector::Zero(dim);
    for (Index k = 0; k < size; ++k) {
      const int idx = order[pos + k];
      label_sum += labels[idx];
      cls.mean += y.row(idx).transpose();
    }
    cls.mean /= static_cast<double>(size);
    cls.representative_label = label_sum / static_cast<double>(size);

    Matrix cov = Matrix::Zero(dim, dim);
    for (Index k = 0; k < size; ++k) {
      const Vector centered = y.row(order[pos + k]).transpose() - cls.mean;
      cov += centered * centered.transpose();
    }
    cov /= static_cast<double>(size);
    cls.covariance = (1.0 - shrinkage) * cov + shrinkage * Matrix(cov.diagonal().asDiagonal());

    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(cls.covariance));
    if (llt.info() != Eigen::Success)
      throw NumericError("class " + std::to_string(c) +
                         " covariance is singular even after shrinkage");
    cls.precision = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    double log_det = 0.0;
    for (int k = 0; k < dim; ++k) log_det += 2.0 * std::log(llt.matrixL()(k, k));
    cls.log_norm = std::log(cls.prior) -
                   0.5 * (log_det + dim * std::log(2.0 * 3.14159265358979323846));

    model.classes.push_back(std::move(cls));
    pos += size;
  }
  return model;
}

Vector posteriors(const SoftEstimatorModel& m, const Vector& y) {
  if (y.size() != m.n_features) throw ConfigError("feature dimension mismatch");
  Vector logp = log_posteriors(m, y);
  const double peak = logp.maxCoeff();
  Vector p = (logp.array() - peak).exp();
  return p / p.sum();
}

double soft_estimate(const SoftEstimatorModel& m, const Vector& y, Rounding rounding) {
  const Vector p = posteriors(m, y);
  double estimate = 0.0;
  for (std::size_t c = 0; c < m.classes.size(); ++c)
    estimate += m.classes[c].representative_label * p[static_cast<Index>(c)];
  return rounding == Rounding::floor ? std::floor(estimate) : estimate;
}

std::vector<double> soft_estimate(const SoftEstimatorModel& m, const Matrix& y,
                                  Rounding rounding) {
  std::vector<double> out(y.rows());
  for (Index r = 0; r < y.rows(); ++r)
    out[r] = soft_estimate(m, Vector(y.row(r).transpose()), rounding);
  return out;
}

int classify(const SoftEstimatorModel& m, const Vector& y) {
  if (y.size() != m.n_features) throw ConfigError("feature dimension mismatch");
  const Vector logp = log_posteriors(m, y);
  Index arg = 0;
  logp.maxCoeff(&arg);
  return static_cast<int>(arg);
}

std::vector<int> classify(const SoftEstimatorModel& m, const Matrix& y) {
  std::vector<int> out(y.rows());
  for (Index r = 0; r < y.rows(); ++r) out[r] = classify(m, Vector(y.row(r).transpose()));
  return out;
}

Metrics evaluate(const std::vector<double>& labels_true, const std::vector<double>& labels_est,
                 const std::vector<double>& thresholds) {
  if (labels_true.size() != labels_est.size()) throw ConfigError("label vectors differ in length");
  if (labels_true.empty()) throw ConfigError("cannot evaluate an empty set");
  Metrics m;
  m.n = labels_true.size();
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  std::vector<double> abs_errors(m.n);
  for (std::size_t k = 0; k < m.n; ++k) {
    const double err = labels_est[k] - labels_true[k];
    abs_errors[k] = std::abs(err);
    abs_sum += abs_errors[k];
    sq_sum += err * err;
  }
  m.mae = abs_sum / static_cast<double>(m.n);
  m.rmse = std::sqrt(sq_sum / static_cast<double>(m.n));
  for (double t : thresholds) {
    std::size_t hits = 0;
    for (double e : abs_errors)
      if (e <= t) ++hits;
    m.cumulative_scores.emplace_back(t, static_cast<double>(hits) / static_cast<double>(m.n));
  }
  return m;
}

}  // namespace higsfa::supervised

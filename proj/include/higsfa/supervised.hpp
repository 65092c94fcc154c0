#pragma once

#include <vector>

#include "higsfa/types.hpp"

namespace higsfa::supervised {

enum class Rounding { raw, floor };

struct GaussianClass {
  double representative_label = 0.0;  // mean label of the class members
  Vector mean;
  Matrix covariance;    // after shrinkage
  double prior = 0.0;
  // Cached for the posterior evaluation.
  Matrix precision;
  double log_norm = 0.0;  // log prior - 0.5 log det(2 pi cov)
};

struct SoftEstimatorModel {
  std::vector<GaussianClass> classes;
  int n_features = 0;
  double shrinkage = 0.01;
};

// Labels are sorted and split into n_classes contiguous groups of equal size
// (remainder to the earliest groups); each class gets a full-covariance
// Gaussian with diagonal shrinkage.
SoftEstimatorModel train_soft_estimator(const Matrix& y, const std::vector<double>& labels,
                                        int n_classes, double shrinkage = 0.01);

// Normalized class posteriors P(C_l | y).
Vector posteriors(const SoftEstimatorModel& m, const Vector& y);

// Posterior-weighted mean of the representative labels.
double soft_estimate(const SoftEstimatorModel& m, const Vector& y,
                     Rounding rounding = Rounding::raw);
std::vector<double> soft_estimate(const SoftEstimatorModel& m, const Matrix& y,
                                  Rounding rounding = Rounding::raw);

int classify(const SoftEstimatorModel& m, const Vector& y);
std::vector<int> classify(const SoftEstimatorModel& m, const Matrix& y);

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::vector<std::pair<double, double>> cumulative_scores;  // (threshold, fraction)
  std::size_t n = 0;
};

Metrics evaluate(const std::vector<double>& labels_true, const std::vector<double>& labels_est,
                 const std::vector<double>& thresholds);

}  // namespace higsfa::supervised

#pragma once

#include <string>
#include <vector>

#include "higsfa/graphs.hpp"
#include "higsfa/types.hpp"

namespace higsfa::gsfa {

struct Moments {
  Vector mean;      // vertex-weighted mean
  Matrix cov;       // vertex-weighted covariance (1/Q_v normalization)
  Matrix diff_cov;  // edge-weighted difference covariance (1/R, both orientations)
};

// Group-structured graphs (clustered/serial, and combined graphs built from
// them) take an O(N I^2) accumulation over per-group sums; everything else
// enumerates edges.
Moments weighted_moments(const Matrix& x, const graphs::TrainingGraph& g);

struct GSFAModel {
  int input_dim = 0;
  int n_features = 0;
  Matrix projection;    // n_features x input_dim
  Vector input_offset;  // vertex-weighted mean of the training data
  Vector deltas;        // ascending generalized eigenvalues
  int rank_used = 0;    // whitening directions kept
};

struct TrainOptions {
  double rank_rtol = 1e-9;          // eigenvalue cutoff relative to the largest
  bool cap_features_to_rank = false;  // clamp n_features instead of throwing
};

GSFAModel train_gsfa(const Matrix& x, const graphs::TrainingGraph& g, int n_features,
                     const TrainOptions& opts = {});

Matrix extract_gsfa(const GSFAModel& m, const Matrix& x);
Vector extract_gsfa(const GSFAModel& m, const Vector& x);

struct DeltaReport {
  Vector deltas;                   // per feature, after unit-variance normalization
  std::vector<bool> zero_variance; // flagged features report delta 0
  std::string graph_id;
  int n_samples = 0;
};

DeltaReport delta_of(const Matrix& y, const graphs::TrainingGraph& g);

struct PCAModel {
  Vector mean;
  Matrix components;  // d x input_dim, orthonormal rows, descending variance
  Vector variances;
};

// Sample covariance (1/(N-1)); errors if d exceeds the covariance rank.
PCAModel train_pca(const Matrix& x, int d);
Matrix apply_pca(const PCAModel& m, const Matrix& x);
Vector apply_pca(const PCAModel& m, const Vector& x);
Matrix invert_pca(const PCAModel& m, const Matrix& h);
Vector invert_pca(const PCAModel& m, const Vector& h);

}  // namespace higsfa::gsfa

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "higsfa/expansions.hpp"
#include "higsfa/graphs.hpp"
#include "higsfa/gsfa.hpp"
#include "higsfa/types.hpp"

namespace higsfa::igsfa {

enum class ScalingMode { qr, sensitivity };

// Either a delta threshold (features with delta below it form the slow part)
// or a fixed slow-part size that bypasses the threshold.
struct SlowSelector {
  std::optional<double> delta_threshold;
  std::optional<int> fixed_count;

  static SlowSelector threshold(double t) { return {t, std::nullopt}; }
  static SlowSelector fixed(int j) { return {std::nullopt, j}; }
};

// Information-preserving node: output is the scaled slow part (GSFA features
// below the delta threshold) concatenated with principal components of the
// residual left after linearly reconstructing the input from the slow part.
struct IGSFANodeModel {
  int input_dim = 0;       // I
  int expanded_dim = 0;    // I'
  int output_dim = 0;      // D
  int n_slow = 0;          // J
  SlowSelector selector;
  expansions::ExpansionSpec expansion;
  ScalingMode scaling = ScalingMode::sensitivity;

  Vector input_mean;       // plain mean of the training inputs
  gsfa::GSFAModel gsfa;    // trained on the expanded centered data
  Matrix ls_map;           // M: I x J, least-squares map from slow features
  Vector ls_offset;        // b
  Matrix q;                // I x J orthonormal columns (qr mode)
  Matrix r;                // J x J upper triangular (qr mode)
  Vector lambda;           // column norms of M, floored (sensitivity mode)
  double scale_floor = 0.0;
  gsfa::PCAModel residual_pca;  // D - J components

  std::vector<std::string> warnings;
};

// Intermediate signals of one forward pass, exposed for tests and tracing.
struct NodeSignals {
  Matrix expanded;        // z
  Matrix slow_raw;        // s' (J unit-variance GSFA features)
  Matrix slow_scaled;     // y'
  Matrix slow_approx;     // a = M s' + b
  Matrix residual;        // u = x' - a
  Matrix reconstructive;  // h
  Matrix output;          // y = y' | h
};

IGSFANodeModel train_node(const Matrix& x, const graphs::TrainingGraph& g, int output_dim,
                          const SlowSelector& selector, const expansions::ExpansionSpec& expansion,
                          ScalingMode scaling = ScalingMode::sensitivity);

Matrix extract_node(const IGSFANodeModel& m, const Matrix& x);
Vector extract_node(const IGSFANodeModel& m, const Vector& x);

Matrix reconstruct_node(const IGSFANodeModel& m, const Matrix& y);
Vector reconstruct_node(const IGSFANodeModel& m, const Vector& y);

gsfa::DeltaReport node_delta_report(const IGSFANodeModel& m, const Matrix& x,
                                    const graphs::TrainingGraph& g);

NodeSignals compute_signals(const IGSFANodeModel& m, const Matrix& x);

}  // namespace higsfa::igsfa

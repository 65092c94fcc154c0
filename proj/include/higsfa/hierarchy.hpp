#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "higsfa/igsfa_node.hpp"
#include "higsfa/types.hpp"

namespace higsfa::hierarchy {

enum class NodeKind { igsfa, gsfa };

struct LayerSpec {
  std::array<int, 2> fan_in{1, 1};   // rows, cols of incoming units
  std::array<int, 2> stride{1, 1};
  int output_dim = 1;                // D per node
  expansions::ExpansionSpec expansion;  // empty terms = identity over the node input
  igsfa::SlowSelector selector = igsfa::SlowSelector::threshold(1.96);
  igsfa::ScalingMode scaling = igsfa::ScalingMode::sensitivity;
  std::optional<int> pre_pca_dim;    // per-node PCA applied before the node
  NodeKind node_kind = NodeKind::igsfa;
  std::array<int, 2> grid_shape{0, 0};  // filled by build_network; validated if preset
};

struct NetworkSpec {
  std::array<int, 2> input_shape{1, 1};  // rows, cols (one channel)
  std::vector<LayerSpec> layers;
  std::string name;
};

struct NodeWiring {
  std::vector<int> input_columns;  // flat column indices into the layer below
};

struct LayerWiring {
  int rows = 0;
  int cols = 0;
  int node_input_dim = 0;   // before any pre-PCA
  std::vector<NodeWiring> nodes;  // row-major over the grid
};

struct WiringPlan {
  std::vector<LayerWiring> layers;
  int output_dim = 0;  // total width of the top layer
};

// Validates the geometry (exact tiling, full coverage, a single top node)
// and resolves per-node input column lists.  Fills grid_shape in the spec.
WiringPlan build_network(NetworkSpec& spec);

// Classic node: centering, expansion, GSFA keeping D unit-variance features.
struct GsfaNodeModel {
  int input_dim = 0;
  Vector input_mean;
  expansions::ExpansionSpec expansion;
  gsfa::GSFAModel gsfa;
};

struct NodeModel {
  std::optional<gsfa::PCAModel> pre_pca;
  std::variant<igsfa::IGSFANodeModel, GsfaNodeModel> node;

  int output_dim() const;
  Matrix extract(const Matrix& x) const;
};

struct TrainedNetwork {
  NetworkSpec spec;
  WiringPlan wiring;
  std::vector<std::vector<NodeModel>> nodes;  // [layer][row-major grid position]

  int input_dim() const { return spec.input_shape[0] * spec.input_shape[1]; }
  int output_dim() const { return wiring.output_dim; }
};

// Layer-by-layer training; every node sees its receptive-field slice of the
// same samples and the same training graph.  Nodes within a layer may train
// in parallel; results do not depend on scheduling.
TrainedNetwork train_network(const NetworkSpec& spec, const Matrix& x,
                             const graphs::TrainingGraph& g, int threads = 1);

Matrix extract_network(const TrainedNetwork& net, const Matrix& x);

// Global linear reconstruction x_hat = map * y + offset, fit by least
// squares; input_mean anchors the error normalization (a zero map scores
// exactly 1).
struct GlobalReconstructionModel {
  Matrix map;         // input_dim x feature_dim
  Vector offset;
  Vector input_mean;  // training mean of the inputs
};

GlobalReconstructionModel fit_global_reconstruction(const Matrix& x_train, const Matrix& y_train);
Matrix reconstruct_global(const GlobalReconstructionModel& m, const Matrix& y);

// Residual energy over centered data energy on the evaluation set.
double e_rec(const GlobalReconstructionModel& m, const Matrix& x_eval, const Matrix& y_eval);

}  // namespace higsfa::hierarchy

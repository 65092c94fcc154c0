#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "higsfa/types.hpp"

namespace higsfa::graphs {

// One stored edge; interpreted symmetrically, so delta and moment sums count
// both orientations and the edge normalizer R does too.
struct Edge {
  int i = 0;
  int j = 0;  // i < j
  double weight = 1.0;
};

enum class GroupKind { clustered, serial };

// Group layout that lets clustered/serial graphs keep their dense edge sets
// implicit: covariance accumulation and delta sums run on per-group sums
// instead of enumerating Theta(N^2/L) pairs.
struct GroupStructure {
  GroupKind kind = GroupKind::clustered;
  std::vector<int> group_of_sample;        // length N
  std::vector<int> group_sizes;            // length L
  std::vector<double> representative_labels;  // serial graphs only, strictly increasing
};

struct TrainingGraph {
  int n_samples = 0;
  Vector vertex_weights;                    // v_n > 0
  std::vector<Edge> edges;                  // explicit triples (generic graphs)
  std::optional<GroupStructure> structure;  // implicit edge set when present
  std::vector<TrainingGraph> parts;         // combined graphs keep their parts
  double edge_normalizer = 0.0;             // R = sum over both orientations
  double vertex_normalizer = 0.0;           // Q_v = sum of vertex weights
  std::string id;

  bool has_implicit_edges() const { return structure.has_value(); }

  // Visits every edge exactly once as f(i, j, weight) with i < j; implicit
  // group edges are enumerated, combined graphs recurse into their parts
  // (the same pair may then be visited once per part).
  void for_each_edge(const std::function<void(int, int, double)>& f) const;

  std::size_t edge_count() const;
};

// Chain over the sample order; GSFA on this graph matches plain SFA.
TrainingGraph linear_graph(int n_samples);

// All within-class pairs with weight 1/(N_s - 1); no inter-class edges.
TrainingGraph clustered_graph(const std::vector<int>& class_of_sample);

// Samples sorted by label, split into n_groups; consecutive groups fully
// connected with weight 1; endpoint groups get vertex weight 1, inner 2.
std::pair<TrainingGraph, GroupStructure> serial_graph(const std::vector<double>& labels,
                                                      int n_groups);

struct CombineResult {
  TrainingGraph graph;
  std::vector<std::string> warnings;  // vertex-weight proportionality violations
};

// Sum of vertex weights and of edge weights over the union of edge sets.
CombineResult combine_graphs(const std::vector<TrainingGraph>& graphs);

// Generic triple-list loader; normalizes orientation to i < j and rejects
// self-loops, duplicates and non-positive weights.
TrainingGraph graph_from_edges(int n_samples, Vector vertex_weights, std::vector<Edge> edges);

TrainingGraph scaled(const TrainingGraph& g, double edge_scale, double vertex_scale);

// Flattened symmetric edge list with duplicate pairs merged; intended for
// small graphs (validation, oracle tests).
std::vector<Edge> materialized_edges(const TrainingGraph& g);

struct Finding {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string message;
};

std::vector<Finding> validate_graph(const TrainingGraph& g);

}  // namespace higsfa::graphs

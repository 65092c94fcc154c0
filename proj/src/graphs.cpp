#include "higsfa/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace higsfa::graphs {

namespace {

std::vector<std::vector<int>> group_members(const GroupStructure& s) {
  std::vector<std::vector<int>> members(s.group_sizes.size());
  for (std::size_t l = 0; l < members.size(); ++l) members[l].reserve(s.group_sizes[l]);
  for (std::size_t n = 0; n < s.group_of_sample.size(); ++n)
    members[s.group_of_sample[n]].push_back(static_cast<int>(n));
  return members;
}

double implicit_edge_normalizer(const GroupStructure& s) {
  double r = 0.0;
  if (s.kind == GroupKind::clustered) {
    // Per class s: N_s (N_s - 1) ordered pairs of weight 1/(N_s - 1).
    for (int sz : s.group_sizes)
      if (sz >= 2) r += static_cast<double>(sz);
  } else {
    for (std::size_t l = 0; l + 1 < s.group_sizes.size(); ++l)
      r += 2.0 * static_cast<double>(s.group_sizes[l]) * static_cast<double>(s.group_sizes[l + 1]);
  }
  return r;
}

}  // namespace

void TrainingGraph::for_each_edge(const std::function<void(int, int, double)>& f) const {
  if (!parts.empty()) {
    for (const auto& p : parts) p.for_each_edge(f);
    return;
  }
  if (structure) {
    const auto members = group_members(*structure);
    if (structure->kind == GroupKind::clustered) {
      for (std::size_t s = 0; s < members.size(); ++s) {
        const auto& m = members[s];
        if (m.size() < 2) continue;
        const double w = 1.0 / (static_cast<double>(m.size()) - 1.0);
        for (std::size_t a = 0; a < m.size(); ++a)
          for (std::size_t b = a + 1; b < m.size(); ++b)
            f(std::min(m[a], m[b]), std::max(m[a], m[b]), w);
      }
    } else {
      for (std::size_t l = 0; l + 1 < members.size(); ++l)
        for (int a : members[l])
          for (int b : members[l + 1]) f(std::min(a, b), std::max(a, b), 1.0);
    }
    return;
  }
  for (const auto& e : edges) f(e.i, e.j, e.weight);
}

std::size_t TrainingGraph::edge_count() const {
  std::size_t n = 0;
  for_each_edge([&](int, int, double) { ++n; });
  return n;
}

TrainingGraph linear_graph(int n_samples) {
  if (n_samples < 3) throw ConfigError("linear graph needs at least 3 samples");
  TrainingGraph g;
  g.n_samples = n_samples;
  g.vertex_weights = Vector::Ones(n_samples);
  g.edges.reserve(n_samples - 1);
  for (int n = 0; n + 1 < n_samples; ++n) g.edges.push_back({n, n + 1, 1.0});
  g.edge_normalizer = 2.0 * (n_samples - 1);
  g.vertex_normalizer = static_cast<double>(n_samples);
  g.id = "linear";
  return g;
}

TrainingGraph clustered_graph(const std::vector<int>& class_of_sample) {
  if (class_of_sample.empty()) throw ConfigError("clustered graph needs at least one sample");
  const int n = static_cast<int>(class_of_sample.size());
  const int max_class = *std::max_element(class_of_sample.begin(), class_of_sample.end());
  const int min_class = *std::min_element(class_of_sample.begin(), class_of_sample.end());
  if (min_class < 0) throw ConfigError("class ids must be non-negative");

  GroupStructure s;
  s.kind = GroupKind::clustered;
  s.group_of_sample = class_of_sample;
  s.group_sizes.assign(max_class + 1, 0);
  for (int c : class_of_sample) ++s.group_sizes[c];
  for (std::size_t c = 0; c < s.group_sizes.size(); ++c)
    if (s.group_sizes[c] == 0) throw ConfigError("class " + std::to_string(c) + " has no samples");

  TrainingGraph g;
  g.n_samples = n;
  g.vertex_weights = Vector::Ones(n);
  g.structure = std::move(s);
  g.edge_normalizer = implicit_edge_normalizer(*g.structure);
  g.vertex_normalizer = static_cast<double>(n);
  g.id = "clustered";
  return g;
}

std::pair<TrainingGraph, GroupStructure> serial_graph(const std::vector<double>& labels,
                                                      int n_groups) {
  const int n = static_cast<int>(labels.size());
  if (n_groups < 2) throw ConfigError("serial graph needs at least 2 groups");
  if (n < 2 * n_groups)
    throw ConfigError("serial graph with " + std::to_string(n_groups) + " groups needs at least " +
                      std::to_string(2 * n_groups) + " samples, got " + std::to_string(n));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return labels[a] < labels[b]; });

  const int base = n / n_groups;
  const int remainder = n % n_groups;

  GroupStructure s;
  s.kind = GroupKind::serial;
  s.group_of_sample.assign(n, 0);
  s.group_sizes.resize(n_groups);
  s.representative_labels.resize(n_groups);

  int pos = 0;
  for (int l = 0; l < n_groups; ++l) {
    const int size = base + (l < remainder ? 1 : 0);
    if (size == 0) throw ConfigError("serial graph group would be empty");
    double label_sum = 0.0;
    for (int k = 0; k < size; ++k) {
      const int sample = order[pos + k];
      s.group_of_sample[sample] = l;
      label_sum += labels[sample];
    }
    s.group_sizes[l] = size;
    s.representative_labels[l] = label_sum / size;
    pos += size;
  }

  TrainingGraph g;
  g.n_samples = n;
  g.vertex_weights = Vector::Constant(n, 2.0);
  for (int k = 0; k < n; ++k) {
    const int l = s.group_of_sample[k];
    if (l == 0 || l == n_groups - 1) g.vertex_weights[k] = 1.0;
  }
  g.structure = s;
  g.edge_normalizer = implicit_edge_normalizer(s);
  g.vertex_normalizer = g.vertex_weights.sum();
  g.id = "serial";
  return {std::move(g), std::move(s)};
}

CombineResult combine_graphs(const std::vector<TrainingGraph>& graphs) {
  if (graphs.empty()) throw ConfigError("cannot combine an empty list of graphs");
  const int n = graphs.front().n_samples;
  for (const auto& g : graphs)
    if (g.n_samples != n) throw ConfigError("combined graphs must share the sample count");

  CombineResult result;
  // Proportionality of vertex weights is a soundness requirement of the
  // combination, but mixtures like serial + clustered violate it mildly by
  // construction, so it is reported rather than enforced.
  const Vector& v0 = graphs.front().vertex_weights;
  for (std::size_t k = 1; k < graphs.size(); ++k) {
    const Vector& vk = graphs[k].vertex_weights;
    const double ratio = vk.sum() / v0.sum();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(vk[i] / (ratio * v0[i]) - 1.0));
    if (worst > 1e-6) {
      std::ostringstream oss;
      oss << "vertex weights of graph " << k << " (" << graphs[k].id
          << ") are not proportional to graph 0 (" << graphs.front().id
          << "); max relative deviation " << worst;
      result.warnings.push_back(oss.str());
    }
  }

  TrainingGraph g;
  g.n_samples = n;
  g.vertex_weights = Vector::Zero(n);
  g.edge_normalizer = 0.0;
  for (const auto& p : graphs) {
    g.vertex_weights += p.vertex_weights;
    g.edge_normalizer += p.edge_normalizer;
    g.parts.push_back(p);
  }
  g.vertex_normalizer = g.vertex_weights.sum();
  g.id = "combined";
  result.graph = std::move(g);
  return result;
}

TrainingGraph graph_from_edges(int n_samples, Vector vertex_weights, std::vector<Edge> edges) {
  if (n_samples < 1) throw ConfigError("graph needs at least one sample");
  if (vertex_weights.size() != n_samples) throw ConfigError("vertex weight length mismatch");
  std::set<std::pair<int, int>> seen;
  for (auto& e : edges) {
    if (e.i == e.j) throw ConfigError("self-loop at vertex " + std::to_string(e.i));
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= n_samples) throw ConfigError("edge index out of range");
    if (e.weight <= 0.0) throw ConfigError("edge weights must be positive");
    if (!seen.insert({e.i, e.j}).second)
      throw ConfigError("duplicate edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ")");
  }
  for (int i = 0; i < n_samples; ++i)
    if (vertex_weights[i] <= 0.0) throw ConfigError("vertex weights must be positive");

  TrainingGraph g;
  g.n_samples = n_samples;
  g.vertex_weights = std::move(vertex_weights);
  g.edges = std::move(edges);
  double r = 0.0;
  for (const auto& e : g.edges) r += 2.0 * e.weight;
  g.edge_normalizer = r;
  g.vertex_normalizer = g.vertex_weights.sum();
  g.id = "explicit";
  return g;
}

TrainingGraph scaled(const TrainingGraph& g, double edge_scale, double vertex_scale) {
  if (edge_scale <= 0.0 || vertex_scale <= 0.0) throw ConfigError("scales must be positive");
  TrainingGraph out = g;
  out.vertex_weights *= vertex_scale;
  out.vertex_normalizer *= vertex_scale;
  out.edge_normalizer *= edge_scale;
  for (auto& e : out.edges) e.weight *= edge_scale;
  if (out.structure || !out.parts.empty()) {
    // Implicit edge sets have fixed weights; represent the scaled graph
    // explicitly instead (materialization, fine at validation scale).
    out.edges = materialized_edges(g);
    for (auto& e : out.edges) e.weight *= edge_scale;
    out.structure.reset();
    out.parts.clear();
  }
  out.id = g.id + "-scaled";
  return out;
}

std::vector<Edge> materialized_edges(const TrainingGraph& g) {
  std::map<std::pair<int, int>, double> merged;
  g.for_each_edge([&](int i, int j, double w) { merged[{i, j}] += w; });
  std::vector<Edge> out;
  out.reserve(merged.size());
  for (const auto& [key, w] : merged) out.push_back({key.first, key.second, w});
  return out;
}

std::vector<Finding> validate_graph(const TrainingGraph& g) {
  std::vector<Finding> findings;
  auto error = [&](const std::string& m) { findings.push_back({Finding::Severity::error, m}); };
  auto warning = [&](const std::string& m) { findings.push_back({Finding::Severity::warning, m}); };

  if (g.n_samples < 1) {
    error("graph has no samples");
    return findings;
  }
  if (g.vertex_weights.size() != g.n_samples) error("vertex weight length mismatch");
  for (int i = 0; i < g.vertex_weights.size(); ++i)
    if (!(g.vertex_weights[i] > 0.0))
      error("non-positive vertex weight at " + std::to_string(i));

  std::set<std::pair<int, int>> seen;
  std::vector<bool> touched(g.n_samples, false);
  double r = 0.0;
  bool indices_ok = true;
  g.for_each_edge([&](int i, int j, double w) {
    if (i == j) error("self-loop at " + std::to_string(i));
    if (i < 0 || j < 0 || i >= g.n_samples || j >= g.n_samples) {
      error("edge index out of range (" + std::to_string(i) + "," + std::to_string(j) + ")");
      indices_ok = false;
      return;
    }
    if (!(w > 0.0)) error("non-positive edge weight on (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
    if (g.parts.empty() && !seen.insert({std::min(i, j), std::max(i, j)}).second)
      error("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    touched[i] = touched[j] = true;
    r += 2.0 * w;
  });

  if (indices_ok) {
    for (int i = 0; i < g.n_samples; ++i)
      if (!touched[i]) warning("isolated vertex " + std::to_string(i));
  }

  const double q = g.vertex_weights.sum();
  if (std::abs(q - g.vertex_normalizer) > 1e-12 * std::max(1.0, std::abs(q)))
    error("stored vertex normalizer inconsistent with recomputed sum");
  if (std::abs(r - g.edge_normalizer) > 1e-12 * std::max(1.0, std::abs(r)))
    error("stored edge normalizer inconsistent with recomputed sum");

  if (g.structure) {
    const auto& s = *g.structure;
    if (static_cast<int>(s.group_of_sample.size()) != g.n_samples)
      error("group assignment length mismatch");
    long long total = 0;
    for (int sz : s.group_sizes) total += sz;
    if (total != g.n_samples) error("group sizes do not sum to the sample count");
    if (s.kind == GroupKind::serial) {
      for (std::size_t l = 0; l + 1 < s.representative_labels.size(); ++l)
        if (!(s.representative_labels[l] < s.representative_labels[l + 1]))
          error("serial representative labels not strictly increasing");
    }
  }
  return findings;
}

}  // namespace higsfa::graphs

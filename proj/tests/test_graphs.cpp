#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "higsfa/graphs.hpp"
#include "higsfa/rng.hpp"

using namespace higsfa;
using namespace higsfa::graphs;

namespace {

std::map<std::pair<int, int>, double> edge_map(const TrainingGraph& g) {
  std::map<std::pair<int, int>, double> out;
  for (const auto& e : materialized_edges(g)) out[{e.i, e.j}] = e.weight;
  return out;
}

}  // namespace

TEST_CASE("linear graph construction") {
  const auto g = linear_graph(4);
  CHECK(g.n_samples == 4);
  CHECK(g.vertex_weights.isOnes());
  const auto edges = edge_map(g);
  CHECK(edges.size() == 3);
  CHECK(edges.at({0, 1}) == 1.0);
  CHECK(edges.at({1, 2}) == 1.0);
  CHECK(edges.at({2, 3}) == 1.0);
  CHECK(g.edge_normalizer == doctest::Approx(6.0));
  CHECK(g.vertex_normalizer == doctest::Approx(4.0));
  CHECK(validate_graph(g).empty());

  CHECK_THROWS_AS(linear_graph(2), ConfigError);
}

TEST_CASE("clustered graph weights follow the class sizes") {
  // Classes of size 2 and 3.
  const auto g = clustered_graph({0, 0, 1, 1, 1});
  const auto edges = edge_map(g);
  CHECK(edges.size() == 4);
  CHECK(edges.at({0, 1}) == doctest::Approx(1.0));
  CHECK(edges.at({2, 3}) == doctest::Approx(0.5));
  CHECK(edges.at({2, 4}) == doctest::Approx(0.5));
  CHECK(edges.at({3, 4}) == doctest::Approx(0.5));
  CHECK(g.vertex_weights.isOnes());
  CHECK(g.edge_normalizer == doctest::Approx(5.0));  // sum of class sizes >= 2

  CHECK_THROWS_AS(clustered_graph({}), ConfigError);
}

TEST_CASE("singleton classes contribute no edges but stay valid") {
  const auto g = clustered_graph({0, 1, 1});
  CHECK(edge_map(g).size() == 1);
  const auto findings = validate_graph(g);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].severity == Finding::Severity::warning);
  CHECK(findings[0].message.find("isolated vertex 0") != std::string::npos);
}

TEST_CASE("serial graph weighting scheme") {
  const std::vector<double> labels = {1, 2, 3, 4, 5, 6};
  const auto [g, structure] = serial_graph(labels, 3);
  CHECK(structure.group_sizes == std::vector<int>{2, 2, 2});
  CHECK(structure.representative_labels[0] == doctest::Approx(1.5));
  CHECK(structure.representative_labels[1] == doctest::Approx(3.5));
  CHECK(structure.representative_labels[2] == doctest::Approx(5.5));

  Vector expected(6);
  expected << 1, 1, 2, 2, 1, 1;
  CHECK((g.vertex_weights - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(edge_map(g).size() == 8);
  CHECK(g.vertex_normalizer == doctest::Approx(8.0));
  CHECK(g.edge_normalizer == doctest::Approx(16.0));
  CHECK(validate_graph(g).empty());

  CHECK_THROWS_AS(serial_graph(labels, 1), ConfigError);
  CHECK_THROWS_AS(serial_graph({1.0, 2.0, 3.0}, 2), ConfigError);
}

TEST_CASE("serial remainder goes to the earliest groups") {
  const std::vector<double> labels = {7, 1, 3, 2, 6, 4, 5};
  const auto [g, structure] = serial_graph(labels, 3);
  CHECK(structure.group_sizes == std::vector<int>{3, 2, 2});
  // All pairs between consecutive groups: 3*2 + 2*2.
  CHECK(edge_map(g).size() == 10);

  // Any two vertices of one group share identical neighbour sets.
  const auto edges = edge_map(g);
  auto neighbours = [&](int v) {
    std::map<int, double> out;
    for (const auto& [key, w] : edges) {
      if (key.first == v) out[key.second] = w;
      if (key.second == v) out[key.first] = w;
    }
    return out;
  };
  // Samples with labels 1,2,3 form group 0.
  CHECK(neighbours(1) == neighbours(3));
}

TEST_CASE("serial graph sorts by label with index ties") {
  const std::vector<double> labels = {5, 5, 1, 1, 9, 9};
  const auto [g, structure] = serial_graph(labels, 3);
  CHECK(structure.group_of_sample == std::vector<int>{1, 1, 0, 0, 2, 2});
}

TEST_CASE("singleton serial groups give a chain with doubled inner weights") {
  const std::vector<double> labels = {1, 2, 3, 4};
  const auto [g, structure] = serial_graph(labels, 4);
  CHECK(structure.group_sizes == std::vector<int>{1, 1, 1, 1});
  Vector expected(4);
  expected << 1, 2, 2, 1;
  CHECK((g.vertex_weights - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(edge_map(g).size() == 3);
}

TEST_CASE("combining graphs sums weights over the edge union") {
  const auto a = clustered_graph({0, 0, 1, 1});
  const auto b = clustered_graph({0, 1, 1, 0});
  const auto combined = combine_graphs({a, b});
  CHECK(combined.warnings.empty());
  const auto edges = edge_map(combined.graph);
  CHECK(edges.at({0, 1}) == doctest::Approx(1.0));
  CHECK(edges.at({2, 3}) == doctest::Approx(1.0));
  CHECK(edges.at({0, 3}) == doctest::Approx(1.0));
  CHECK(edges.at({1, 2}) == doctest::Approx(1.0));
  CHECK(combined.graph.vertex_weights.isConstant(2.0));
  CHECK(combined.graph.edge_normalizer == doctest::Approx(a.edge_normalizer + b.edge_normalizer));

  // Identity: combining one graph changes nothing.
  const auto single = combine_graphs({a});
  CHECK(single.graph.edge_normalizer == doctest::Approx(a.edge_normalizer));
  CHECK(single.graph.vertex_normalizer == doctest::Approx(a.vertex_normalizer));
  CHECK(edge_map(single.graph) == edge_map(a));
}

TEST_CASE("combination is commutative in the merged weights") {
  const std::vector<double> labels = {0.1, 0.7, 0.3, 0.9, 0.5, 0.2, 0.8, 0.4};
  const auto serial = serial_graph(labels, 4).first;
  const auto clustered = clustered_graph({0, 1, 0, 1, 0, 1, 0, 1});
  const auto ab = combine_graphs({serial, clustered}).graph;
  const auto ba = combine_graphs({clustered, serial}).graph;
  CHECK(edge_map(ab) == edge_map(ba));
  CHECK((ab.vertex_weights - ba.vertex_weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("serial plus clustered vertex weights trigger a warning, not an error") {
  const std::vector<double> labels = {0.1, 0.7, 0.3, 0.9, 0.5, 0.2, 0.8, 0.4};
  const auto serial = serial_graph(labels, 4).first;
  const auto clustered = clustered_graph({0, 1, 0, 1, 0, 1, 0, 1});
  const auto combined = combine_graphs({serial, clustered});
  CHECK(combined.warnings.size() == 1);

  CHECK_THROWS_AS(combine_graphs({}), ConfigError);
  CHECK_THROWS_AS(combine_graphs({serial, clustered_graph({0, 1})}), ConfigError);
}

TEST_CASE("validate flags injected defects") {
  auto g = linear_graph(4);
  g.edges.push_back({2, 2, 1.0});
  bool found = false;
  for (const auto& f : validate_graph(g))
    if (f.message.find("self-loop at 2") != std::string::npos) found = true;
  CHECK(found);

  auto h = linear_graph(4);
  h.edges[0].weight = -1.0;
  found = false;
  for (const auto& f : validate_graph(h))
    if (f.message.find("non-positive edge weight") != std::string::npos) found = true;
  CHECK(found);

  auto k = linear_graph(4);
  k.edge_normalizer = 100.0;
  found = false;
  for (const auto& f : validate_graph(k))
    if (f.message.find("edge normalizer") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("triple list loader normalizes and rejects bad input") {
  const auto g = graph_from_edges(3, Vector::Ones(3), {{2, 0, 1.5}, {1, 2, 0.5}});
  const auto edges = edge_map(g);
  CHECK(edges.at({0, 2}) == doctest::Approx(1.5));
  CHECK(edges.at({1, 2}) == doctest::Approx(0.5));
  CHECK(g.edge_normalizer == doctest::Approx(4.0));

  CHECK_THROWS_AS(graph_from_edges(3, Vector::Ones(3), {{0, 0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(graph_from_edges(3, Vector::Ones(3), {{0, 1, 1.0}, {1, 0, 2.0}}), ConfigError);
  CHECK_THROWS_AS(graph_from_edges(3, Vector::Ones(3), {{0, 5, 1.0}}), ConfigError);
  CHECK_THROWS_AS(graph_from_edges(3, Vector::Zero(3), {}), ConfigError);
}

TEST_CASE("scaled graphs keep consistent normalizers") {
  const auto g = clustered_graph({0, 0, 1, 1, 1});
  const auto s = scaled(g, 10.0, 3.0);
  CHECK(s.edge_normalizer == doctest::Approx(10.0 * g.edge_normalizer));
  CHECK(s.vertex_normalizer == doctest::Approx(3.0 * g.vertex_normalizer));
  CHECK(validate_graph(s).empty());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "higsfa/gsfa.hpp"
#include "higsfa/rng.hpp"

using namespace higsfa;
using namespace higsfa::gsfa;
using higsfa::graphs::TrainingGraph;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

// Direct evaluation of the weighted moment definitions by edge enumeration;
// the production path is checked against this.
Moments naive_moments(const Matrix& x, const TrainingGraph& g) {
  const Index dim = x.cols();
  Moments m;
  m.mean = Vector::Zero(dim);
  for (Index n = 0; n < x.rows(); ++n) m.mean += g.vertex_weights[n] * x.row(n).transpose();
  m.mean /= g.vertex_normalizer;

  m.cov = Matrix::Zero(dim, dim);
  for (Index n = 0; n < x.rows(); ++n) {
    const Vector d = x.row(n).transpose() - m.mean;
    m.cov += g.vertex_weights[n] * d * d.transpose();
  }
  m.cov /= g.vertex_normalizer;

  m.diff_cov = Matrix::Zero(dim, dim);
  for (const auto& e : graphs::materialized_edges(g)) {
    const Vector d = x.row(e.j).transpose() - x.row(e.i).transpose();
    m.diff_cov += 2.0 * e.weight * d * d.transpose();
  }
  m.diff_cov /= g.edge_normalizer;
  return m;
}

// Independent plain-SFA route: population covariance, covariance of
// consecutive differences, and Eigen's generalized symmetric solver.
Matrix plain_sfa_features(const Matrix& x, int n_features) {
  const Index n = x.rows();
  Matrix xc = x;
  xc.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = Eigen::MatrixXd(xc.transpose() * xc) / static_cast<double>(n);
  Eigen::MatrixXd diffs(n - 1, x.cols());
  for (Index t = 0; t + 1 < n; ++t) diffs.row(t) = x.row(t + 1) - x.row(t);
  const Eigen::MatrixXd diff_cov =
      (diffs.transpose() * diffs) / static_cast<double>(n - 1);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(diff_cov, cov);
  REQUIRE(ges.info() == Eigen::Success);
  return Matrix(Eigen::MatrixXd(xc) * ges.eigenvectors().leftCols(n_features));
}

void align_columns(Matrix& candidate, const Matrix& reference) {
  for (Index c = 0; c < candidate.cols(); ++c)
    if (candidate.col(c).dot(reference.col(c)) < 0.0) candidate.col(c) = -candidate.col(c);
}

double abs_correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return std::abs(ac.dot(bc)) / (ac.norm() * bc.norm());
}

}  // namespace

TEST_CASE("moments on the linear graph reduce to plain SFA moments") {
  Rng rng(1);
  const Matrix x = random_matrix(50, 4, rng);
  const auto g = graphs::linear_graph(50);
  const auto m = weighted_moments(x, g);

  const Vector mean = x.colwise().mean();
  CHECK((m.mean - mean).cwiseAbs().maxCoeff() < 1e-12);

  Matrix diff_ref = Matrix::Zero(4, 4);
  for (Index t = 0; t + 1 < 50; ++t) {
    const Vector d = x.row(t + 1).transpose() - x.row(t).transpose();
    diff_ref += d * d.transpose();
  }
  diff_ref /= 49.0;
  CHECK((m.diff_cov - diff_ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("group fast paths equal naive pair enumeration") {
  Rng rng(2);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform_int(0, 30));
    const int dim = 2 + static_cast<int>(rng.uniform_int(0, 6));
    const Matrix x = random_matrix(n, dim, rng, 2.0);

    std::vector<int> classes(n);
    for (auto& c : classes) c = static_cast<int>(rng.uniform_int(0, 2));
    const auto clustered = graphs::clustered_graph(classes);
    const auto fast_c = weighted_moments(x, clustered);
    const auto slow_c = naive_moments(x, clustered);
    CHECK((fast_c.diff_cov - slow_c.diff_cov).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fast_c.cov - slow_c.cov).cwiseAbs().maxCoeff() < 1e-10);

    std::vector<double> labels(n);
    for (auto& v : labels) v = rng.uniform01();
    const auto serial = graphs::serial_graph(labels, 3 + static_cast<int>(rng.uniform_int(0, 3))).first;
    const auto fast_s = weighted_moments(x, serial);
    const auto slow_s = naive_moments(x, serial);
    CHECK((fast_s.diff_cov - slow_s.diff_cov).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fast_s.mean - slow_s.mean).cwiseAbs().maxCoeff() < 1e-12);

    const auto combined = graphs::combine_graphs({serial, clustered}).graph;
    const auto fast_comb = weighted_moments(x, combined);
    const auto slow_comb = naive_moments(x, combined);
    CHECK((fast_comb.diff_cov - slow_comb.diff_cov).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("serial example normalizers flow into the moments") {
  const std::vector<double> labels = {1, 2, 3, 4, 5, 6};
  const auto [g, structure] = graphs::serial_graph(labels, 3);
  CHECK(g.vertex_normalizer == doctest::Approx(8.0));
  CHECK(g.edge_normalizer == doctest::Approx(16.0));
}

TEST_CASE("training features satisfy the weighted constraints") {
  Rng rng(3);
  const int n = 120;
  const Matrix x = random_matrix(n, 6, rng);
  std::vector<double> labels(n);
  for (auto& v : labels) v = rng.uniform01();
  const auto g = graphs::serial_graph(labels, 5).first;

  const auto model = train_gsfa(x, g, 4);
  const Matrix y = extract_gsfa(model, x);

  Vector wmean = Vector::Zero(4);
  Matrix wcov = Matrix::Zero(4, 4);
  for (Index r = 0; r < n; ++r) wmean += g.vertex_weights[r] * y.row(r).transpose();
  wmean /= g.vertex_normalizer;
  for (Index r = 0; r < n; ++r) {
    const Vector d = y.row(r).transpose() - wmean;
    wcov += g.vertex_weights[r] * d * d.transpose();
  }
  wcov /= g.vertex_normalizer;

  CHECK(wmean.cwiseAbs().maxCoeff() < 1e-8);
  CHECK((wcov - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);

  // Ascending deltas that match the per-feature delta evaluation.
  for (int j = 0; j + 1 < 4; ++j) CHECK(model.deltas[j] <= model.deltas[j + 1] + 1e-12);
  const auto report = delta_of(y, g);
  CHECK((report.deltas - model.deltas).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("slow latent signal is recovered from a linear mixture") {
  Rng rng(4);
  const int n = 2000;
  Matrix base(n, 10);
  for (Index t = 0; t < n; ++t) base(t, 0) = std::sin(2.0 * 3.14159265358979 * 3.0 * t / n);
  for (Index t = 0; t < n; ++t)
    for (Index c = 1; c < 10; ++c) base(t, c) = rng.normal();
  const Matrix mix = random_matrix(10, 10, rng);
  const Matrix x = base * mix;

  const auto model = train_gsfa(x, graphs::linear_graph(n), 3);
  const Matrix y = extract_gsfa(model, x);
  CHECK(abs_correlation(y.col(0), base.col(0)) > 0.99);
}

TEST_CASE("iid noise deltas sit near two") {
  Rng rng(5);
  const int n = 10000;
  const Matrix x = random_matrix(n, 10, rng);
  const auto model = train_gsfa(x, graphs::linear_graph(n), 10);
  for (int j = 0; j < 10; ++j) {
    CHECK(model.deltas[j] > 1.9);
    CHECK(model.deltas[j] < 2.1);
  }
}

TEST_CASE("duplicate columns are removed by rank truncation") {
  Rng rng(6);
  Matrix x = random_matrix(200, 5, rng);
  Matrix with_dup(200, 7);
  with_dup.leftCols(5) = x;
  with_dup.col(5) = x.col(0);
  with_dup.col(6) = x.col(3);
  const auto g = graphs::linear_graph(200);

  const auto model = train_gsfa(with_dup, g, 5);
  CHECK(model.rank_used == 5);

  CHECK_THROWS_AS(train_gsfa(with_dup, g, 6), NumericError);
  TrainOptions capped;
  capped.cap_features_to_rank = true;
  CHECK(train_gsfa(with_dup, g, 6, capped).n_features == 5);
}

TEST_CASE("extraction is centered and permutation stable") {
  Rng rng(7);
  const int n = 200;
  const Matrix x = random_matrix(n, 6, rng);
  std::vector<int> classes(n);
  for (auto& c : classes) c = static_cast<int>(rng.uniform_int(0, 2));
  const auto g = graphs::clustered_graph(classes);
  const auto model = train_gsfa(x, g, 3);

  CHECK(extract_gsfa(model, Vector(model.input_offset)).cwiseAbs().maxCoeff() < 1e-10);

  // Shuffle samples together with the graph's class assignment.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int k = n - 1; k > 0; --k) std::swap(perm[k], perm[rng.uniform_int(0, k)]);
  Matrix xp(n, 6);
  std::vector<int> classes_p(n);
  for (int k = 0; k < n; ++k) {
    xp.row(k) = x.row(perm[k]);
    classes_p[k] = classes[perm[k]];
  }
  const auto model_p = train_gsfa(xp, graphs::clustered_graph(classes_p), 3);
  Matrix y = extract_gsfa(model, x);
  Matrix yp = extract_gsfa(model_p, xp);
  // Per-sample outputs must agree after undoing the permutation.
  Matrix yp_unshuffled(n, 3);
  for (int k = 0; k < n; ++k) yp_unshuffled.row(perm[k]) = yp.row(k);
  align_columns(yp_unshuffled, y);
  CHECK((yp_unshuffled - y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("delta evaluation matches hand computations") {
  Matrix y(4, 1);
  y << 1, -1, 1, -1;
  const auto report = delta_of(y, graphs::linear_graph(4));
  CHECK(report.deltas[0] == doctest::Approx(4.0));

  Matrix constant(4, 1);
  constant.setConstant(3.3);
  const auto flagged = delta_of(constant, graphs::linear_graph(4));
  CHECK(flagged.zero_variance[0]);
  CHECK(flagged.deltas[0] == 0.0);

  Rng rng(8);
  Matrix noise(10000, 1);
  for (Index t = 0; t < noise.rows(); ++t) noise(t, 0) = rng.normal();
  const auto nr = delta_of(noise, graphs::linear_graph(10000));
  CHECK(nr.deltas[0] > 1.9);
  CHECK(nr.deltas[0] < 2.1);
}

TEST_CASE("gsfa on the linear graph equals the independent plain-SFA oracle") {
  Rng rng(9);
  const Matrix x = random_matrix(500, 10, rng);
  const auto model = train_gsfa(x, graphs::linear_graph(500), 5);
  Matrix mine = extract_gsfa(model, x);
  const Matrix oracle = plain_sfa_features(x, 5);
  align_columns(mine, oracle);
  CHECK((mine - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("graph weight scaling leaves features unchanged") {
  Rng rng(10);
  const int n = 80;
  const Matrix x = random_matrix(n, 5, rng);
  std::vector<double> labels(n);
  for (auto& v : labels) v = rng.uniform01();
  const auto g = graphs::serial_graph(labels, 4).first;
  const auto scaled = graphs::scaled(g, 10.0, 3.0);

  const Matrix y = extract_gsfa(train_gsfa(x, g, 3), x);
  Matrix ys = extract_gsfa(train_gsfa(x, scaled, 3), x);
  align_columns(ys, y);
  CHECK((ys - y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca recovers structure and round trips") {
  Rng rng(11);
  const int n = 10000;
  Matrix x(n, 2);
  for (Index t = 0; t < n; ++t) {
    x(t, 0) = 3.0 * rng.normal();
    x(t, 1) = 0.3 * rng.normal();
  }
  // Rotate so the major axis is at 30 degrees.
  const double angle = 3.14159265358979 / 6.0;
  Matrix rot(2, 2);
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  const Matrix xr = x * rot.transpose();

  const auto model = train_pca(xr, 2);
  Vector axis(2);
  axis << std::cos(angle), std::sin(angle);
  CHECK(std::abs(model.components.row(0).dot(axis)) > 0.999);
  CHECK(model.variances[0] > model.variances[1]);

  // Full-rank round trip.
  const Matrix h = apply_pca(model, xr);
  CHECK((invert_pca(model, h) - xr).cwiseAbs().maxCoeff() < 1e-10);

  // Variances equal the sample covariance eigenvalues.
  Matrix xc = xr;
  xc.rowwise() -= xr.colwise().mean();
  const Eigen::MatrixXd cov = Eigen::MatrixXd(xc.transpose() * xc) / (n - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  CHECK(model.variances[0] == doctest::Approx(eig.eigenvalues()[1]).epsilon(1e-10));
  CHECK(model.variances[1] == doctest::Approx(eig.eigenvalues()[0]).epsilon(1e-10));

  CHECK_THROWS_AS(train_pca(Matrix(random_matrix(20, 3, rng) * Matrix::Zero(3, 3)), 1),
                  NumericError);
}

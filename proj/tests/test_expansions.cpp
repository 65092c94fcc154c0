#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "higsfa/expansions.hpp"
#include "higsfa/rng.hpp"

using namespace higsfa;
using namespace higsfa::expansions;

TEST_CASE("identity plus quadratic on a 2-vector") {
  const auto spec = ExpansionSpec::quadratic(2);
  Vector x(2);
  x << 1, 2;
  const Vector out = spec.expand(x);
  REQUIRE(out.size() == 5);  // k(k+3)/2 with k=2
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 2.0);
  CHECK(out[2] == 1.0);
  CHECK(out[3] == 2.0);
  CHECK(out[4] == 4.0);
}

TEST_CASE("e08 term") {
  ExpansionSpec spec{{{TermKind::e08, 0, 2}}};
  Vector x(2);
  x << 0, -1;
  const Vector out = spec.expand(x);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("qn normalizes by the slice norm") {
  ExpansionSpec spec{{{TermKind::qn, 0, 2}}};
  Vector x(2);
  x << 1, 1;
  const Vector out = spec.expand(x);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == doctest::Approx(1.0 / 3.0));
  CHECK(out[1] == doctest::Approx(1.0 / 3.0));
  CHECK(out[2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("declared output dimensions") {
  CHECK(ExpansionSpec::quadratic(10).output_dim(10) == 65);
  CHECK(ExpansionSpec::identity(7).output_dim(7) == 7);
  ExpansionSpec max_only{{{TermKind::max2, 0, 18}}};
  CHECK(max_only.output_dim(18) == 17);
}

TEST_CASE("output dim always matches the expanded length") {
  Rng rng(5);
  ExpansionSpec spec{{{TermKind::identity, 0, 6},
                      {TermKind::qt, 1, 4},
                      {TermKind::qn, 2, 6},
                      {TermKind::e08, 0, 5},
                      {TermKind::max2, 0, 6}}};
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(6);
    for (int i = 0; i < 6; ++i) x[i] = rng.normal();
    CHECK(spec.expand(x).size() == spec.output_dim(6));
  }
  // Expansion of the zero vector is finite.
  const Vector zero = spec.expand(Vector(Vector::Zero(6)));
  CHECK(zero.allFinite());
}

TEST_CASE("batch expansion equals per-sample expansion") {
  Rng rng(9);
  ExpansionSpec spec{{{TermKind::identity, 0, 4}, {TermKind::qn, 0, 3}, {TermKind::max2, 1, 4}}};
  Matrix x(5, 4);
  for (Index r = 0; r < 5; ++r)
    for (Index c = 0; c < 4; ++c) x(r, c) = rng.normal();
  const Matrix batch = spec.expand(x);
  for (Index r = 0; r < 5; ++r) {
    const Vector single = spec.expand(Vector(x.row(r).transpose()));
    CHECK((batch.row(r).transpose() - single).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("range validation") {
  ExpansionSpec bad{{{TermKind::qt, 0, 5}}};
  CHECK_THROWS_AS(bad.validate(4), ConfigError);
  ExpansionSpec inverted{{{TermKind::identity, 3, 2}}};
  CHECK_THROWS_AS(inverted.validate(4), ConfigError);
  ExpansionSpec short_max{{{TermKind::max2, 0, 1}}};
  CHECK_THROWS_AS(short_max.validate(4), ConfigError);
}

TEST_CASE("json round trip") {
  const auto j = nlohmann::json::parse(R"([
    {"term":"identity","to":18},
    {"term":"e08","to":15},
    {"term":"max2","to":17},
    {"term":"qt","to":10}
  ])");
  const auto spec = expansion_from_json(j, 20);
  REQUIRE(spec.terms.size() == 4);
  CHECK(spec.terms[0].kind == TermKind::identity);
  CHECK(spec.terms[0].to == 18);
  CHECK(spec.terms[3].kind == TermKind::qt);
  CHECK(spec.output_dim(20) == 18 + 15 + 16 + 55);

  const auto back = expansion_from_json(expansion_to_json(spec), 20);
  CHECK(back.output_dim(20) == spec.output_dim(20));

  CHECK_THROWS_AS(expansion_from_json(nlohmann::json::parse(R"([{"term":"cubic"}])"), 4),
                  ConfigError);
}

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "higsfa/types.hpp"

namespace higsfa::expansions {

// Nonlinear feature maps applied inside a node before linear GSFA.  Each
// term acts on a contiguous slice [from, to) of the input vector:
//   identity  x_i
//   qt        x_i * x_j for i <= j (row-major upper triangle)
//   qn        qt scaled by 1 / (1 + |x_slice|^2)
//   e08       |x_i|^0.8
//   max2      max(x_i, x_{i+1})
enum class TermKind { identity, qt, qn, e08, max2 };

struct Term {
  TermKind kind = TermKind::identity;
  int from = 0;
  int to = 0;  // exclusive
};

struct ExpansionSpec {
  std::vector<Term> terms;

  static ExpansionSpec identity(int dim);
  // identity | qt on the full input: the classic quadratic expansion with
  // k(k+3)/2 output components.
  static ExpansionSpec quadratic(int dim);

  void validate(int input_dim) const;
  int output_dim(int input_dim) const;

  Vector expand(const Vector& x) const;
  Matrix expand(const Matrix& x) const;  // row-wise
};

const char* term_name(TermKind k);
TermKind term_from_name(const std::string& name);

ExpansionSpec expansion_from_json(const nlohmann::json& spec, int input_dim);
nlohmann::json expansion_to_json(const ExpansionSpec& spec);

}  // namespace higsfa::expansions

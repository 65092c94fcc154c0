#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "higsfa/types.hpp"

namespace higsfa::datasets {

enum class Split : std::uint8_t { dr = 0, s = 1, t = 2 };

struct LabelColumn {
  std::string name;
  std::vector<double> values;
  bool categorical = false;
};

struct DatasetBundle {
  Matrix x;
  std::vector<LabelColumn> labels;
  std::vector<LabelColumn> latents;  // generator ground truth for oracle checks
  std::vector<std::uint8_t> split;   // one Split tag per row

  const LabelColumn& label(const std::string& name) const;
  const LabelColumn& latent(const std::string& name) const;
  std::vector<int> rows_of(Split s) const;
  Matrix x_of(Split s) const;
  std::vector<double> label_of(Split s, const std::string& name) const;
};

struct SplitFractions {
  double dr = 0.5;
  double s = 0.25;
  double t = 0.25;
};

// Four independent two-valued Markov chains s1, s2, s3, n with the given
// flip probabilities, observed as (s2, s1*n, s3, n).  A chain with flip
// probability p has delta value 4p.
DatasetBundle gen_toy_infoloss(int n, const std::array<double, 4>& flip_probs, std::uint64_t seed,
                               const SplitFractions& splits = {});

enum class RegressionMode { linear, modulated };

// Smooth bounded random walk theta as the label.  In linear mode theta is
// mixed directly into every channel block alongside i.i.d. distractors.  In
// modulated mode theta reaches the observations only as theta^2 and as
// carrier products theta*c_k, with the carriers c_k placed in different
// blocks, so recovering theta itself requires combining information across
// blocks (locally the products look like noise).
DatasetBundle gen_latent_regression(int n, int input_dim, double noise, std::uint64_t seed,
                                    RegressionMode mode = RegressionMode::modulated,
                                    const SplitFractions& splits = {});

// Numeric label plus two independent binary labels with their own
// generative directions, for combined-graph runs.
DatasetBundle gen_multilabel(int n, std::uint64_t seed, const SplitFractions& splits = {});

void save_dataset(const std::string& path, const DatasetBundle& data);
DatasetBundle load_dataset(const std::string& path);

}  // namespace higsfa::datasets

#include "higsfa/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "higsfa/rng.hpp"

namespace higsfa::datasets {

namespace {

using nlohmann::json;

std::vector<std::uint8_t> make_split_tags(int n, const SplitFractions& f) {
  const double total = f.dr + f.s + f.t;
  if (!(f.dr > 0.0) || f.s < 0.0 || f.t < 0.0 || std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split fractions must be non-negative and sum to 1");
  const int n_dr = static_cast<int>(std::floor(f.dr * n));
  const int n_s = static_cast<int>(std::floor(f.s * n));
  std::vector<std::uint8_t> tags(n, static_cast<std::uint8_t>(Split::t));
  for (int k = 0; k < n_dr; ++k) tags[k] = static_cast<std::uint8_t>(Split::dr);
  for (int k = n_dr; k < n_dr + n_s && k < n; ++k) tags[k] = static_cast<std::uint8_t>(Split::s);
  return tags;
}

// Two-valued Markov chain on {-1, +1}: zero mean, unit variance, delta 4p.
std::vector<double> markov_chain(int n, double flip_prob, Rng& rng) {
  std::vector<double> out(n);
  double state = rng.bernoulli(0.5) ? 1.0 : -1.0;
  out[0] = state;
  for (int t = 1; t < n; ++t) {
    if (rng.bernoulli(flip_prob)) state = -state;
    out[t] = state;
  }
  return out;
}

// Random walk with Gaussian steps reflected into [-1, 1]; the stationary
// distribution is approximately uniform on the interval.
std::vector<double> reflected_walk(int n, double step, Rng& rng) {
  std::vector<double> out(n);
  double value = rng.uniform(-1.0, 1.0);
  for (int t = 0; t < n; ++t) {
    value += step * rng.normal();
    while (value > 1.0 || value < -1.0) {
      if (value > 1.0) value = 2.0 - value;
      if (value < -1.0) value = -2.0 - value;
    }
    out[t] = value;
  }
  return out;
}

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("unexpected end of file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError("unexpected end of file");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

json columns_to_json(const std::vector<LabelColumn>& cols) {
  json out = json::array();
  for (const auto& c : cols)
    out.push_back({{"name", c.name}, {"categorical", c.categorical}, {"values", c.values}});
  return out;
}

std::vector<LabelColumn> columns_from_json(const json& j) {
  std::vector<LabelColumn> out;
  for (const auto& item : j) {
    LabelColumn c;
    c.name = item.at("name").get<std::string>();
    c.categorical = item.at("categorical").get<bool>();
    c.values = item.at("values").get<std::vector<double>>();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

const LabelColumn& DatasetBundle::label(const std::string& name) const {
  for (const auto& c : labels)
    if (c.name == name) return c;
  throw ConfigError("unknown label column '" + name + "'");
}

const LabelColumn& DatasetBundle::latent(const std::string& name) const {
  for (const auto& c : latents)
    if (c.name == name) return c;
  throw ConfigError("unknown latent column '" + name + "'");
}

std::vector<int> DatasetBundle::rows_of(Split s) const {
  std::vector<int> rows;
  for (std::size_t k = 0; k < split.size(); ++k)
    if (split[k] == static_cast<std::uint8_t>(s)) rows.push_back(static_cast<int>(k));
  return rows;
}

Matrix DatasetBundle::x_of(Split s) const {
  const auto rows = rows_of(s);
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
  return out;
}

std::vector<double> DatasetBundle::label_of(Split s, const std::string& name) const {
  const auto& col = label(name);
  std::vector<double> out;
  for (std::size_t k = 0; k < split.size(); ++k)
    if (split[k] == static_cast<std::uint8_t>(s)) out.push_back(col.values[k]);
  return out;
}

DatasetBundle gen_toy_infoloss(int n, const std::array<double, 4>& flip_probs, std::uint64_t seed,
                               const SplitFractions& splits) {
  if (n < 10) throw ConfigError("toy dataset needs at least 10 samples");
  for (double p : flip_probs)
    if (!(p > 0.0) || p > 0.5) throw ConfigError("flip probabilities must be in (0, 0.5]");

  Rng root(seed);
  Rng r1 = root.stream(0), r2 = root.stream(1), r3 = root.stream(2), r4 = root.stream(3);
  const auto s1 = markov_chain(n, flip_probs[0], r1);
  const auto s2 = markov_chain(n, flip_probs[1], r2);
  const auto s3 = markov_chain(n, flip_probs[2], r3);
  const auto nn = markov_chain(n, flip_probs[3], r4);

  DatasetBundle data;
  data.x = Matrix(n, 4);
  for (int t = 0; t < n; ++t) {
    data.x(t, 0) = s2[t];
    data.x(t, 1) = s1[t] * nn[t];
    data.x(t, 2) = s3[t];
    data.x(t, 3) = nn[t];
  }
  data.latents = {{"s1", s1, false}, {"s2", s2, false}, {"s3", s3, false}, {"n", nn, false}};
  data.split = make_split_tags(n, splits);
  return data;
}

DatasetBundle gen_latent_regression(int n, int input_dim, double noise, std::uint64_t seed,
                                    RegressionMode mode, const SplitFractions& splits) {
  if (input_dim < 4) throw ConfigError("latent regression needs input_dim >= 4");
  if (n < 100) throw ConfigError("latent regression needs at least 100 samples");
  if (noise < 0.0) throw ConfigError("noise must be non-negative");

  Rng root(seed);
  Rng theta_rng = root.stream(0);
  Rng carrier_rng = root.stream(1);
  Rng distractor_rng = root.stream(2);
  Rng mix_rng = root.stream(3);
  Rng noise_rng = root.stream(4);

  const std::vector<double> theta = reflected_walk(n, 0.05, theta_rng);

  constexpr int kBlocks = 8;
  const int block_size = input_dim / kBlocks;
  const int used_dim = block_size * kBlocks;
  if (block_size < 1) throw ConfigError("input_dim must be at least 8");

  // Base signals per block; analytic stationary scales keep every signal at
  // roughly unit variance before the amplitude factors below.
  const double theta_scale = std::sqrt(3.0);       // var(theta) = 1/3
  const double theta_sq_scale = std::sqrt(45.0 / 4.0);
  const double theta_sq_mean = 1.0 / 3.0;

  DatasetBundle data;
  data.x = Matrix::Zero(n, input_dim);

  std::vector<std::vector<double>> carriers;
  if (mode == RegressionMode::modulated) {
    for (int k = 0; k < kBlocks / 2; ++k) {
      Rng r = carrier_rng.stream(k);
      carriers.push_back(markov_chain(n, 0.5, r));  // i.i.d. carriers
    }
  }

  for (int b = 0; b < kBlocks; ++b) {
    std::vector<std::vector<double>> signals;
    std::vector<double> amplitude;
    if (mode == RegressionMode::linear) {
      std::vector<double> th(n);
      for (int t = 0; t < n; ++t) th[t] = theta[t] * theta_scale;
      signals.push_back(std::move(th));
      amplitude.push_back(1.0);
    } else {
      if (b < kBlocks / 2) {
        std::vector<double> product(n);
        for (int t = 0; t < n; ++t) product[t] = theta[t] * carriers[b][t] * theta_scale;
        signals.push_back(std::move(product));
        amplitude.push_back(2.0);
      } else {
        signals.push_back(carriers[b - kBlocks / 2]);
        amplitude.push_back(2.0);
      }
      if (b == 0 || b == kBlocks / 2) {
        std::vector<double> sq(n);
        for (int t = 0; t < n; ++t)
          sq[t] = (theta[t] * theta[t] - theta_sq_mean) * theta_sq_scale;
        signals.push_back(std::move(sq));
        amplitude.push_back(1.0);
      }
    }
    for (int d = 0; d < 2; ++d) {
      Rng r = distractor_rng.stream(static_cast<std::uint64_t>(b) * 4 + d);
      std::vector<double> row(n);
      for (int t = 0; t < n; ++t) row[t] = r.normal();
      signals.push_back(std::move(row));
      amplitude.push_back(1.0);
    }

    // Fixed random full-rank mixing of the block signals into its channels.
    Rng r = mix_rng.stream(b);
    Matrix mix(block_size, static_cast<Index>(signals.size()));
    for (Index i = 0; i < mix.rows(); ++i)
      for (Index j = 0; j < mix.cols(); ++j) mix(i, j) = r.normal() / std::sqrt(block_size);
    for (int t = 0; t < n; ++t) {
      for (int i = 0; i < block_size; ++i) {
        double value = 0.0;
        for (std::size_t s = 0; s < signals.size(); ++s)
          value += mix(i, static_cast<Index>(s)) * amplitude[s] * signals[s][t];
        data.x(t, b * block_size + i) = value;
      }
    }
  }
  for (int c = used_dim; c < input_dim; ++c) {
    Rng r = distractor_rng.stream(1000 + c);
    for (int t = 0; t < n; ++t) data.x(t, c) = r.normal();
  }
  if (noise > 0.0) {
    for (int t = 0; t < n; ++t)
      for (int c = 0; c < input_dim; ++c) data.x(t, c) += noise * noise_rng.normal();
  }

  data.labels = {{"theta", theta, false}};
  data.latents.push_back({"theta", theta, false});
  std::vector<double> theta_sq(n);
  for (int t = 0; t < n; ++t) theta_sq[t] = theta[t] * theta[t];
  data.latents.push_back({"theta_sq", theta_sq, false});
  for (std::size_t k = 0; k < carriers.size(); ++k)
    data.latents.push_back({"carrier" + std::to_string(k), carriers[k], false});
  data.split = make_split_tags(n, splits);
  return data;
}

DatasetBundle gen_multilabel(int n, std::uint64_t seed, const SplitFractions& splits) {
  if (n < 200) throw ConfigError("multilabel dataset needs at least 200 samples");
  constexpr int kDim = 24;

  Rng root(seed);
  Rng theta_rng = root.stream(0);
  Rng flag_rng = root.stream(1);
  Rng mix_rng = root.stream(2);
  Rng distractor_rng = root.stream(3);
  Rng noise_rng = root.stream(4);

  const std::vector<double> theta = reflected_walk(n, 0.05, theta_rng);
  std::vector<double> flag_a(n), flag_b(n);
  for (int t = 0; t < n; ++t) {
    flag_a[t] = flag_rng.bernoulli(0.5) ? 1.0 : 0.0;
    flag_b[t] = flag_rng.bernoulli(0.5) ? 1.0 : 0.0;
  }

  // Base signals: theta, centered flags, four i.i.d. distractors.
  const int n_signals = 7;
  std::vector<std::vector<double>> signals(n_signals, std::vector<double>(n));
  std::vector<double> amplitude = {1.0, 1.5, 1.5, 1.2, 1.2, 1.2, 1.2};
  for (int t = 0; t < n; ++t) {
    signals[0][t] = theta[t] * std::sqrt(3.0);
    signals[1][t] = (flag_a[t] - 0.5) * 2.0;
    signals[2][t] = (flag_b[t] - 0.5) * 2.0;
  }
  for (int s = 3; s < n_signals; ++s) {
    Rng r = distractor_rng.stream(s);
    for (int t = 0; t < n; ++t) signals[s][t] = r.normal();
  }

  Matrix mix(kDim, n_signals);
  for (Index i = 0; i < mix.rows(); ++i)
    for (Index j = 0; j < mix.cols(); ++j) mix(i, j) = mix_rng.normal() / std::sqrt(kDim);

  DatasetBundle data;
  data.x = Matrix(n, kDim);
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < kDim; ++i) {
      double value = 0.0;
      for (int s = 0; s < n_signals; ++s) value += mix(i, s) * amplitude[s] * signals[s][t];
      data.x(t, i) = value + 0.05 * noise_rng.normal();
    }
  }

  data.labels = {{"value", theta, false}, {"flag_a", flag_a, true}, {"flag_b", flag_b, true}};
  data.latents = {{"theta", theta, false}};
  data.split = make_split_tags(n, splits);
  return data;
}

void save_dataset(const std::string& path, const DatasetBundle& data) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
    os.write("HGSD", 4);
    write_u32(os, static_cast<std::uint32_t>(data.x.rows()));
    write_u32(os, static_cast<std::uint32_t>(data.x.cols()));
    os.write(reinterpret_cast<const char*>(data.x.data()),
             static_cast<std::streamsize>(sizeof(double) * data.x.size()));

    json footer;
    footer["labels"] = columns_to_json(data.labels);
    footer["latents"] = columns_to_json(data.latents);
    footer["split"] = data.split;
    const std::string text = footer.dump();
    write_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

DatasetBundle load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "HGSD") throw IoError("'" + path + "' is not a dataset file");
  const std::uint32_t rows = read_u32(is);
  const std::uint32_t cols = read_u32(is);

  DatasetBundle data;
  data.x = Matrix(rows, cols);
  is.read(reinterpret_cast<char*>(data.x.data()),
          static_cast<std::streamsize>(sizeof(double) * data.x.size()));
  if (!is) throw IoError("truncated dataset payload in '" + path + "'");

  const std::uint64_t footer_len = read_u64(is);
  std::string text(footer_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(footer_len));
  if (!is) throw IoError("truncated dataset footer in '" + path + "'");

  json footer;
  try {
    footer = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("bad dataset footer in '" + path + "': " + e.what());
  }
  data.labels = columns_from_json(footer.at("labels"));
  data.latents = columns_from_json(footer.at("latents"));
  data.split = footer.at("split").get<std::vector<std::uint8_t>>();
  if (data.split.size() != rows) throw IoError("split tags do not match the row count");
  for (const auto& c : data.labels)
    if (c.values.size() != rows) throw IoError("label column length mismatch");
  return data;
}

}  // namespace higsfa::datasets

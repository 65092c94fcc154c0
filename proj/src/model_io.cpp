#include "higsfa/model_io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "higsfa/presets.hpp"

namespace higsfa::model_io {

namespace {

using nlohmann::json;

constexpr std::uint32_t kFormatVersion = 1;

struct ArrayEntry {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::uint64_t offset = 0;  // doubles into the payload
  std::uint64_t count = 0;
};

class ArrayWriter {
 public:
  void add(const std::string& name, const Matrix& m) {
    add_raw(name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
            m.data(), static_cast<std::uint64_t>(m.size()));
  }
  void add(const std::string& name, const Vector& v) {
    add_raw(name, {static_cast<std::uint64_t>(v.size())}, v.data(),
            static_cast<std::uint64_t>(v.size()));
  }

  void write(std::ostream& os, const std::string& meta) const {
    os.write("HGSF", 4);
    write_u32(os, kFormatVersion);
    write_u64(os, meta.size());
    os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    write_u32(os, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
      write_u16(os, static_cast<std::uint16_t>(e.name.size()));
      os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      os.put(static_cast<char>(e.shape.size()));
      for (auto d : e.shape) write_u64(os, d);
      write_u64(os, e.offset * sizeof(double));
    }
    os.write(reinterpret_cast<const char*>(payload_.data()),
             static_cast<std::streamsize>(payload_.size() * sizeof(double)));
  }

 private:
  void add_raw(const std::string& name, std::vector<std::uint64_t> shape, const double* data,
               std::uint64_t count) {
    ArrayEntry e;
    e.name = name;
    e.shape = std::move(shape);
    e.offset = payload_.size();
    e.count = count;
    entries_.push_back(std::move(e));
    payload_.insert(payload_.end(), data, data + count);
  }

  static void write_u16(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
  }
  static void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 4);
  }
  static void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 8);
  }

  std::vector<ArrayEntry> entries_;
  std::vector<double> payload_;
};

class ArrayReader {
 public:
  explicit ArrayReader(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "HGSF")
      throw IoError("'" + path + "' is not a model file");
    const std::uint32_t version = read_u32(is);
    if (version != kFormatVersion)
      throw IoError("model format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kFormatVersion) + ")");
    const std::uint64_t meta_len = read_u64(is);
    meta_.resize(meta_len);
    is.read(meta_.data(), static_cast<std::streamsize>(meta_len));
    if (!is) throw IoError("truncated model metadata");
    const std::uint32_t n_arrays = read_u32(is);
    std::uint64_t total = 0;
    for (std::uint32_t k = 0; k < n_arrays; ++k) {
      ArrayEntry e;
      const std::uint16_t name_len = read_u16(is);
      e.name.resize(name_len);
      is.read(e.name.data(), name_len);
      const int ndim = is.get();
      if (!is || ndim < 0 || ndim > 2) throw IoError("corrupt array directory");
      e.count = 1;
      for (int d = 0; d < ndim; ++d) {
        e.shape.push_back(read_u64(is));
        e.count *= e.shape.back();
      }
      const std::uint64_t byte_offset = read_u64(is);
      if (byte_offset % sizeof(double) != 0) throw IoError("misaligned array offset");
      e.offset = byte_offset / sizeof(double);
      total = std::max(total, e.offset + e.count);
      entries_[e.name] = std::move(e);
    }
    payload_.resize(total);
    is.read(reinterpret_cast<char*>(payload_.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!is || static_cast<std::uint64_t>(is.gcount()) != total * sizeof(double))
      throw IoError("truncated model payload in '" + path + "'");
  }

  const std::string& meta() const { return meta_; }

  Matrix matrix(const std::string& name) const {
    const ArrayEntry& e = find(name, 2);
    Matrix m(static_cast<Index>(e.shape[0]), static_cast<Index>(e.shape[1]));
    std::copy(payload_.begin() + e.offset, payload_.begin() + e.offset + e.count, m.data());
    return m;
  }

  Vector vector(const std::string& name) const {
    const ArrayEntry& e = find(name, 1);
    Vector v(static_cast<Index>(e.shape[0]));
    std::copy(payload_.begin() + e.offset, payload_.begin() + e.offset + e.count, v.data());
    return v;
  }

 private:
  const ArrayEntry& find(const std::string& name, std::size_t ndim) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw IoError("model is missing array '" + name + "'");
    if (it->second.shape.size() != ndim)
      throw IoError("array '" + name + "' has unexpected dimensionality");
    return it->second;
  }

  static std::uint16_t read_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    if (!is) throw IoError("unexpected end of model file");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  static std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("unexpected end of model file");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
    return v;
  }
  static std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("unexpected end of model file");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
  }

  std::string meta_;
  std::map<std::string, ArrayEntry> entries_;
  std::vector<double> payload_;
};

std::string node_prefix(std::size_t layer, std::size_t idx) {
  return "L" + std::to_string(layer) + "/N" + std::to_string(idx) + "/";
}

void save_gsfa(ArrayWriter& w, const std::string& prefix, const gsfa::GSFAModel& m) {
  w.add(prefix + "projection", m.projection);
  w.add(prefix + "offset", m.input_offset);
  w.add(prefix + "deltas", m.deltas);
}

json gsfa_meta(const gsfa::GSFAModel& m) {
  return {{"input_dim", m.input_dim}, {"n_features", m.n_features}, {"rank_used", m.rank_used}};
}

gsfa::GSFAModel load_gsfa(const ArrayReader& r, const std::string& prefix, const json& meta) {
  gsfa::GSFAModel m;
  m.input_dim = meta.at("input_dim").get<int>();
  m.n_features = meta.at("n_features").get<int>();
  m.rank_used = meta.at("rank_used").get<int>();
  m.projection = r.matrix(prefix + "projection");
  m.input_offset = r.vector(prefix + "offset");
  m.deltas = r.vector(prefix + "deltas");
  return m;
}

void save_pca(ArrayWriter& w, const std::string& prefix, const gsfa::PCAModel& m) {
  w.add(prefix + "mean", m.mean);
  w.add(prefix + "components", m.components);
  w.add(prefix + "variances", m.variances);
}

gsfa::PCAModel load_pca(const ArrayReader& r, const std::string& prefix) {
  gsfa::PCAModel m;
  m.mean = r.vector(prefix + "mean");
  m.components = r.matrix(prefix + "components");
  m.variances = r.vector(prefix + "variances");
  return m;
}

}  // namespace

void save_network(const std::string& path, const hierarchy::TrainedNetwork& net,
                  const hierarchy::GlobalReconstructionModel* reconstruction) {
  ArrayWriter writer;
  json meta;
  meta["spec"] = presets::network_to_json(net.spec);
  meta["layers"] = json::array();

  for (std::size_t l = 0; l < net.nodes.size(); ++l) {
    json layer_meta = json::array();
    for (std::size_t idx = 0; idx < net.nodes[l].size(); ++idx) {
      const auto& model = net.nodes[l][idx];
      const std::string prefix = node_prefix(l, idx);
      json jm;
      jm["pre_pca"] = model.pre_pca.has_value();
      if (model.pre_pca) save_pca(writer, prefix + "prepca/", *model.pre_pca);

      if (const auto* ig = std::get_if<igsfa::IGSFANodeModel>(&model.node)) {
        jm["kind"] = "igsfa";
        jm["input_dim"] = ig->input_dim;
        jm["expanded_dim"] = ig->expanded_dim;
        jm["output_dim"] = ig->output_dim;
        jm["n_slow"] = ig->n_slow;
        if (ig->selector.fixed_count)
          jm["fixed_slow"] = *ig->selector.fixed_count;
        else
          jm["delta_threshold"] = *ig->selector.delta_threshold;
        jm["scaling"] = ig->scaling == igsfa::ScalingMode::qr ? "qr" : "sensitivity";
        jm["scale_floor"] = ig->scale_floor;
        jm["expansion"] = expansions::expansion_to_json(ig->expansion);
        jm["gsfa"] = gsfa_meta(ig->gsfa);
        jm["warnings"] = ig->warnings;
        writer.add(prefix + "mean", ig->input_mean);
        save_gsfa(writer, prefix + "gsfa/", ig->gsfa);
        writer.add(prefix + "ls_map", ig->ls_map);
        writer.add(prefix + "ls_offset", ig->ls_offset);
        if (ig->scaling == igsfa::ScalingMode::qr) {
          writer.add(prefix + "q", ig->q);
          writer.add(prefix + "r", ig->r);
        } else {
          writer.add(prefix + "lambda", ig->lambda);
        }
        save_pca(writer, prefix + "pca/", ig->residual_pca);
      } else {
        const auto& plain = std::get<hierarchy::GsfaNodeModel>(model.node);
        jm["kind"] = "gsfa";
        jm["input_dim"] = plain.input_dim;
        jm["expansion"] = expansions::expansion_to_json(plain.expansion);
        jm["gsfa"] = gsfa_meta(plain.gsfa);
        writer.add(prefix + "mean", plain.input_mean);
        save_gsfa(writer, prefix + "gsfa/", plain.gsfa);
      }
      layer_meta.push_back(std::move(jm));
    }
    meta["layers"].push_back(std::move(layer_meta));
  }

  meta["reconstruction"] = reconstruction != nullptr;
  if (reconstruction) {
    writer.add("recon/map", reconstruction->map);
    writer.add("recon/offset", reconstruction->offset);
    writer.add("recon/input_mean", reconstruction->input_mean);
  }

  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
    writer.write(os, meta.dump());
    if (!os) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

ModelFile load_network(const std::string& path) {
  ArrayReader reader(path);
  json meta;
  try {
    meta = json::parse(reader.meta());
  } catch (const json::exception& e) {
    throw IoError(std::string("bad model metadata: ") + e.what());
  }

  ModelFile out;
  out.network.spec = presets::network_from_json(meta.at("spec"));
  out.network.wiring = hierarchy::build_network(out.network.spec);

  const auto& layers_meta = meta.at("layers");
  if (layers_meta.size() != out.network.spec.layers.size())
    throw IoError("layer count mismatch between metadata and spec");
  out.network.nodes.resize(layers_meta.size());

  for (std::size_t l = 0; l < layers_meta.size(); ++l) {
    const auto& layer_meta = layers_meta[l];
    if (layer_meta.size() != out.network.wiring.layers[l].nodes.size())
      throw IoError("node count mismatch in layer " + std::to_string(l));
    for (std::size_t idx = 0; idx < layer_meta.size(); ++idx) {
      const json& jm = layer_meta[idx];
      const std::string prefix = node_prefix(l, idx);
      hierarchy::NodeModel model;
      if (jm.at("pre_pca").get<bool>()) model.pre_pca = load_pca(reader, prefix + "prepca/");

      const std::string kind = jm.at("kind").get<std::string>();
      if (kind == "igsfa") {
        igsfa::IGSFANodeModel ig;
        ig.input_dim = jm.at("input_dim").get<int>();
        ig.expanded_dim = jm.at("expanded_dim").get<int>();
        ig.output_dim = jm.at("output_dim").get<int>();
        ig.n_slow = jm.at("n_slow").get<int>();
        if (jm.contains("fixed_slow"))
          ig.selector = igsfa::SlowSelector::fixed(jm.at("fixed_slow").get<int>());
        else
          ig.selector = igsfa::SlowSelector::threshold(jm.at("delta_threshold").get<double>());
        ig.scaling = jm.at("scaling").get<std::string>() == "qr" ? igsfa::ScalingMode::qr
                                                                 : igsfa::ScalingMode::sensitivity;
        ig.scale_floor = jm.at("scale_floor").get<double>();
        ig.expansion = expansions::expansion_from_json(jm.at("expansion"), ig.input_dim);
        ig.warnings = jm.at("warnings").get<std::vector<std::string>>();
        ig.input_mean = reader.vector(prefix + "mean");
        ig.gsfa = load_gsfa(reader, prefix + "gsfa/", jm.at("gsfa"));
        ig.ls_map = reader.matrix(prefix + "ls_map");
        ig.ls_offset = reader.vector(prefix + "ls_offset");
        if (ig.scaling == igsfa::ScalingMode::qr) {
          ig.q = reader.matrix(prefix + "q");
          ig.r = reader.matrix(prefix + "r");
        } else {
          ig.lambda = reader.vector(prefix + "lambda");
        }
        ig.residual_pca = load_pca(reader, prefix + "pca/");
        model.node = std::move(ig);
      } else if (kind == "gsfa") {
        hierarchy::GsfaNodeModel plain;
        plain.input_dim = jm.at("input_dim").get<int>();
        plain.expansion = expansions::expansion_from_json(jm.at("expansion"), plain.input_dim);
        plain.input_mean = reader.vector(prefix + "mean");
        plain.gsfa = load_gsfa(reader, prefix + "gsfa/", jm.at("gsfa"));
        model.node = std::move(plain);
      } else {
        throw IoError("unknown node kind '" + kind + "' in model file");
      }
      out.network.nodes[l].push_back(std::move(model));
    }
  }

  if (meta.at("reconstruction").get<bool>()) {
    hierarchy::GlobalReconstructionModel recon;
    recon.map = reader.matrix("recon/map");
    recon.offset = reader.vector("recon/offset");
    recon.input_mean = reader.vector("recon/input_mean");
    out.reconstruction = std::move(recon);
  }
  return out;
}

std::string describe_network(const ModelFile& model) {
  std::ostringstream oss;
  const auto& net = model.network;
  oss << "network '" << net.spec.name << "'  input " << net.spec.input_shape[0] << "x"
      << net.spec.input_shape[1] << "  output dim " << net.output_dim() << "\n";
  for (std::size_t l = 0; l < net.nodes.size(); ++l) {
    const auto& wiring = net.wiring.layers[l];
    const auto& layer = net.spec.layers[l];
    oss << "  layer " << (l + 1) << ": " << wiring.rows << "x" << wiring.cols << " nodes, fan-in "
        << layer.fan_in[0] << "x" << layer.fan_in[1] << ", stride " << layer.stride[0] << "x"
        << layer.stride[1] << ", D=" << layer.output_dim
        << (layer.node_kind == hierarchy::NodeKind::igsfa ? " (igsfa)" : " (gsfa)");
    if (layer.pre_pca_dim) oss << ", pre-PCA " << *layer.pre_pca_dim;
    double delta_min = 0.0, delta_max = 0.0;
    int slow_min = -1, slow_max = -1;
    for (const auto& node : net.nodes[l]) {
      const gsfa::GSFAModel* g = nullptr;
      int n_slow = -1;
      if (const auto* ig = std::get_if<igsfa::IGSFANodeModel>(&node.node)) {
        g = &ig->gsfa;
        n_slow = ig->n_slow;
      } else {
        g = &std::get<hierarchy::GsfaNodeModel>(node.node).gsfa;
      }
      if (g->deltas.size() > 0) {
        delta_min = delta_min == 0.0 && delta_max == 0.0 ? g->deltas[0]
                                                         : std::min(delta_min, g->deltas[0]);
        delta_max = std::max(delta_max, g->deltas[g->deltas.size() - 1]);
      }
      if (n_slow >= 0) {
        slow_min = slow_min < 0 ? n_slow : std::min(slow_min, n_slow);
        slow_max = std::max(slow_max, n_slow);
      }
    }
    oss << ", delta range [" << delta_min << ", " << delta_max << "]";
    if (slow_min >= 0) oss << ", slow part " << slow_min << ".." << slow_max;
    oss << "\n";
  }
  oss << (model.reconstruction ? "  global reconstruction model: present\n"
                               : "  global reconstruction model: absent\n");
  return oss.str();
}

}  // namespace higsfa::model_io

#include "higsfa/presets.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

namespace higsfa::presets {

namespace {

using nlohmann::json;

std::array<int, 2> pair_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError(std::string(what) + " must be a [rows, cols] pair");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

hierarchy::NetworkSpec network_from_json(const json& j) {
  hierarchy::NetworkSpec spec;
  spec.name = j.value("name", "");
  spec.input_shape = pair_from_json(j.at("input_shape"), "input_shape");
  if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty())
    throw ConfigError("network needs a non-empty layer list");

  int below_unit_dim = 1;
  for (const auto& jl : j.at("layers")) {
    hierarchy::LayerSpec layer;
    layer.fan_in = pair_from_json(jl.at("fan_in"), "fan_in");
    layer.stride = jl.contains("stride") ? pair_from_json(jl.at("stride"), "stride")
                                         : std::array<int, 2>{1, 1};
    layer.output_dim = jl.at("output_dim").get<int>();
    if (jl.contains("grid")) layer.grid_shape = pair_from_json(jl.at("grid"), "grid");
    if (jl.contains("pre_pca")) layer.pre_pca_dim = jl.at("pre_pca").get<int>();

    const std::string kind = jl.value("node", "igsfa");
    if (kind == "igsfa")
      layer.node_kind = hierarchy::NodeKind::igsfa;
    else if (kind == "gsfa")
      layer.node_kind = hierarchy::NodeKind::gsfa;
    else
      throw ConfigError("unknown node kind '" + kind + "'");

    if (jl.contains("fixed_slow"))
      layer.selector = igsfa::SlowSelector::fixed(jl.at("fixed_slow").get<int>());
    else
      layer.selector = igsfa::SlowSelector::threshold(jl.value("delta_threshold", 1.96));

    const std::string scaling = jl.value("scaling", "sensitivity");
    if (scaling == "sensitivity")
      layer.scaling = igsfa::ScalingMode::sensitivity;
    else if (scaling == "qr")
      layer.scaling = igsfa::ScalingMode::qr;
    else
      throw ConfigError("unknown scaling mode '" + scaling + "'");

    const int node_input = layer.fan_in[0] * layer.fan_in[1] * below_unit_dim;
    const int effective = layer.pre_pca_dim ? *layer.pre_pca_dim : node_input;
    if (jl.contains("expansion"))
      layer.expansion = expansions::expansion_from_json(jl.at("expansion"), effective);

    spec.layers.push_back(std::move(layer));
    below_unit_dim = spec.layers.back().output_dim;
  }
  return spec;
}

json network_to_json(const hierarchy::NetworkSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["input_shape"] = {spec.input_shape[0], spec.input_shape[1]};
  j["layers"] = json::array();
  for (const auto& layer : spec.layers) {
    json jl;
    jl["fan_in"] = {layer.fan_in[0], layer.fan_in[1]};
    jl["stride"] = {layer.stride[0], layer.stride[1]};
    jl["output_dim"] = layer.output_dim;
    if (layer.grid_shape[0] != 0) jl["grid"] = {layer.grid_shape[0], layer.grid_shape[1]};
    if (layer.pre_pca_dim) jl["pre_pca"] = *layer.pre_pca_dim;
    jl["node"] = layer.node_kind == hierarchy::NodeKind::igsfa ? "igsfa" : "gsfa";
    if (layer.selector.fixed_count)
      jl["fixed_slow"] = *layer.selector.fixed_count;
    else
      jl["delta_threshold"] = *layer.selector.delta_threshold;
    jl["scaling"] = layer.scaling == igsfa::ScalingMode::qr ? "qr" : "sensitivity";
    if (!layer.expansion.terms.empty())
      jl["expansion"] = expansions::expansion_to_json(layer.expansion);
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

namespace {

// Quadratic node over the full input.
json quadratic_expansion() {
  return json::array({{{"term", "identity"}}, {{"term", "qt"}}});
}

json toy_preset(bool info_preserving) {
  json bottom = {{"fan_in", {1, 2}}, {"stride", {1, 2}}, {"expansion", quadratic_expansion()}};
  if (info_preserving) {
    bottom["node"] = "igsfa";
    bottom["output_dim"] = 2;
    bottom["delta_threshold"] = 1.96;
  } else {
    bottom["node"] = "gsfa";
    bottom["output_dim"] = 1;
  }
  json top = {{"fan_in", {1, 2}},
              {"stride", {1, 2}},
              {"node", "gsfa"},
              {"output_dim", 1},
              {"expansion", quadratic_expansion()}};
  return {{"name", info_preserving ? "toy_infoloss_higsfa" : "toy_infoloss_hgsfa"},
          {"input_shape", {1, 4}},
          {"layers", {bottom, top}}};
}

json desk3_preset(bool info_preserving) {
  const char* kind = info_preserving ? "igsfa" : "gsfa";
  json layers = json::array();
  layers.push_back({{"fan_in", {1, 8}},
                    {"stride", {1, 8}},
                    {"node", kind},
                    {"output_dim", 5},
                    {"delta_threshold", 1.96},
                    {"expansion", quadratic_expansion()}});
  layers.push_back({{"fan_in", {1, 2}},
                    {"stride", {1, 2}},
                    {"node", kind},
                    {"output_dim", 6},
                    {"delta_threshold", 1.96},
                    {"expansion", quadratic_expansion()}});
  layers.push_back({{"fan_in", {1, 4}},
                    {"stride", {1, 4}},
                    {"node", kind},
                    {"output_dim", 10},
                    {"delta_threshold", 1.96},
                    {"expansion", quadratic_expansion()}});
  return {{"name", info_preserving ? "desk3_higsfa" : "desk3_hgsfa"},
          {"input_shape", {1, 64}},
          {"layers", layers}};
}

// Mixture used for the wide face-image networks: identity and max2 over the
// whole input, e08 over the first three quarters, quadratic terms over the
// first components only to bound the expanded dimension.
json deep_expansion(int input_dim, int e08_to, int max2_to, int qt_to) {
  return json::array({{{"term", "identity"}, {"to", input_dim}},
                      {{"term", "e08"}, {"to", e08_to}},
                      {{"term", "max2"}, {"to", max2_to}},
                      {{"term", "qt"}, {"to", qt_to}}});
}

json default_deep_expansion(int input_dim) {
  return deep_expansion(input_dim, (3 * input_dim + 3) / 4, input_dim, std::min(input_dim, 10));
}

// The 96x96 ten-layer grid network; shipped for offline use, tests only
// validate its wiring.
json face96_preset(bool info_preserving) {
  const std::vector<int> dims_i = {18, 27, 37, 66, 79, 88, 88, 93, 95, 75};
  const std::vector<int> dims_g = {14, 20, 27, 49, 60, 61, 65, 65, 66, 75};
  const auto& dims = info_preserving ? dims_i : dims_g;
  const char* kind = info_preserving ? "igsfa" : "gsfa";

  const std::vector<std::array<int, 2>> fan = {{6, 6}, {3, 1}, {1, 3}, {3, 1}, {1, 3},
                                               {3, 1}, {1, 3}, {3, 1}, {1, 3}, {1, 1}};
  const std::vector<std::array<int, 2>> stride = {{3, 3}, {2, 1}, {1, 2}, {2, 1}, {1, 2},
                                                  {2, 1}, {1, 2}, {1, 1}, {1, 1}, {1, 1}};
  const std::vector<std::array<int, 2>> grid = {{31, 31}, {15, 31}, {15, 15}, {7, 15}, {7, 7},
                                                {3, 7},  {3, 3},  {1, 3},  {1, 1}, {1, 1}};

  json layers = json::array();
  int below_unit = 1;
  for (int l = 0; l < 10; ++l) {
    json jl = {{"fan_in", {fan[l][0], fan[l][1]}},
               {"stride", {stride[l][0], stride[l][1]}},
               {"grid", {grid[l][0], grid[l][1]}},
               {"node", kind},
               {"output_dim", dims[l]}};
    int input_dim = fan[l][0] * fan[l][1] * below_unit;
    if (l == 0) {
      jl["pre_pca"] = 20;
      input_dim = 20;
      jl["expansion"] = deep_expansion(18, 15, 17, 10);
    } else {
      jl["expansion"] = default_deep_expansion(input_dim);
    }
    if (info_preserving) {
      if (l == 0)
        jl["fixed_slow"] = 3;
      else if (l == 1)
        jl["fixed_slow"] = 4;
      else
        jl["delta_threshold"] = 1.96;
    }
    layers.push_back(std::move(jl));
    below_unit = dims[l];
  }
  return {{"name", info_preserving ? "face96_higsfa" : "face96_hgsfa"},
          {"input_shape", {96, 96}},
          {"layers", layers}};
}

}  // namespace

json network_preset(const std::string& name) {
  if (name == "toy_infoloss_higsfa") return toy_preset(true);
  if (name == "toy_infoloss_hgsfa") return toy_preset(false);
  if (name == "desk3_higsfa") return desk3_preset(true);
  if (name == "desk3_hgsfa") return desk3_preset(false);
  if (name == "face96_higsfa") return face96_preset(true);
  if (name == "face96_hgsfa") return face96_preset(false);
  std::ostringstream oss;
  oss << "unknown network preset '" << name << "'; available:";
  for (const auto& p : preset_names()) oss << " " << p;
  throw ConfigError(oss.str());
}

std::vector<std::string> preset_names() {
  return {"toy_infoloss_higsfa", "toy_infoloss_hgsfa", "desk3_higsfa",
          "desk3_hgsfa",        "face96_higsfa",      "face96_hgsfa"};
}

}  // namespace higsfa::presets

#pragma once

#include <optional>
#include <string>

#include "higsfa/hierarchy.hpp"

namespace higsfa::model_io {

struct ModelFile {
  hierarchy::TrainedNetwork network;
  std::optional<hierarchy::GlobalReconstructionModel> reconstruction;
};

// Binary container: magic "HGSF", format version, a JSON metadata blob for
// structure and scalars, and a named-array directory (name, shape, byte
// offset) over a payload of little-endian row-major doubles.
void save_network(const std::string& path, const hierarchy::TrainedNetwork& net,
                  const hierarchy::GlobalReconstructionModel* reconstruction = nullptr);

ModelFile load_network(const std::string& path);

std::string describe_network(const ModelFile& model);

}  // namespace higsfa::model_io

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "higsfa/datasets.hpp"
#include "higsfa/graphs.hpp"
#include "higsfa/types.hpp"

namespace higsfa::experiment {

// Builds a training graph from its JSON description over the rows of one
// split:
//   {"type":"linear"}
//   {"type":"clustered","label_column":NAME}
//   {"type":"serial","label_column":NAME,"groups":L}
//   {"type":"combined","parts":[...]}
//   {"type":"explicit","edges":[[i,j,w],...],"vertex_weights":[...]}
graphs::TrainingGraph graph_from_json(const nlohmann::json& spec,
                                      const datasets::DatasetBundle& data, datasets::Split split);

// Dataset section: either {"path": FILE} or a generator description
// {"generator":"toy_infoloss"|"latent_regression"|"multilabel", "seed":U64, ...}.
datasets::DatasetBundle dataset_from_json(const nlohmann::json& spec,
                                          std::optional<std::uint64_t> seed_override);

// Full pipeline: dataset -> graphs -> network(s) -> supervised step ->
// metrics/delta/reconstruction reports under out_dir.  Returns the metrics
// document that was written.
nlohmann::json run(const nlohmann::json& config, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override, int threads);

void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace higsfa::experiment

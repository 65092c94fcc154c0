#include "higsfa/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "higsfa/hierarchy.hpp"
#include "higsfa/model_io.hpp"
#include "higsfa/presets.hpp"
#include "higsfa/supervised.hpp"

namespace higsfa::experiment {

namespace {

using json = nlohmann::ordered_json;
using nlohmann::json_pointer;

std::vector<double> column_over_rows(const datasets::LabelColumn& col,
                                     const std::vector<int>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(col.values[r]);
  return out;
}

std::vector<int> categorical_ids(const std::vector<double>& values) {
  std::vector<double> unique = values;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<int> ids(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    ids[k] = static_cast<int>(std::lower_bound(unique.begin(), unique.end(), values[k]) -
                              unique.begin());
  return ids;
}

}  // namespace

graphs::TrainingGraph graph_from_json(const nlohmann::json& spec,
                                      const datasets::DatasetBundle& data, datasets::Split split) {
  const std::string type = spec.at("type").get<std::string>();
  const auto rows = data.rows_of(split);
  const int n = static_cast<int>(rows.size());

  if (type == "linear") return graphs::linear_graph(n);
  if (type == "clustered") {
    const auto& col = data.label(spec.at("label_column").get<std::string>());
    return graphs::clustered_graph(categorical_ids(column_over_rows(col, rows)));
  }
  if (type == "serial") {
    const auto& col = data.label(spec.at("label_column").get<std::string>());
    const int groups = spec.at("groups").get<int>();
    return graphs::serial_graph(column_over_rows(col, rows), groups).first;
  }
  if (type == "combined") {
    std::vector<graphs::TrainingGraph> parts;
    for (const auto& part : spec.at("parts"))
      parts.push_back(graph_from_json(part, data, split));
    return graphs::combine_graphs(parts).graph;
  }
  if (type == "explicit") {
    std::vector<graphs::Edge> edges;
    for (const auto& e : spec.at("edges"))
      edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    Vector weights = Vector::Ones(n);
    if (spec.contains("vertex_weights")) {
      const auto vw = spec.at("vertex_weights").get<std::vector<double>>();
      if (static_cast<int>(vw.size()) != n)
        throw ConfigError("vertex_weights length does not match the split size");
      for (int k = 0; k < n; ++k) weights[k] = vw[k];
    }
    return graphs::graph_from_edges(n, std::move(weights), std::move(edges));
  }
  throw ConfigError("unknown graph type '" + type + "'");
}

datasets::DatasetBundle dataset_from_json(const nlohmann::json& spec,
                                          std::optional<std::uint64_t> seed_override) {
  if (spec.contains("path")) return datasets::load_dataset(spec.at("path").get<std::string>());

  const std::string generator = spec.at("generator").get<std::string>();
  std::uint64_t seed = 0;
  if (seed_override)
    seed = *seed_override;
  else if (spec.contains("seed"))
    seed = spec.at("seed").get<std::uint64_t>();
  else
    throw ConfigError("generator-based datasets require a seed");

  datasets::SplitFractions splits;
  if (spec.contains("splits")) {
    const auto& js = spec.at("splits");
    splits.dr = js.value("dr", 0.5);
    splits.s = js.value("s", 0.25);
    splits.t = js.value("t", 0.25);
  }

  const int n = spec.at("n").get<int>();
  if (generator == "toy_infoloss") {
    std::array<double, 4> flips{0.05, 0.1, 0.2, 0.5};
    if (spec.contains("flip_probs")) {
      const auto fp = spec.at("flip_probs").get<std::vector<double>>();
      if (fp.size() != 4) throw ConfigError("flip_probs needs exactly 4 entries");
      std::copy(fp.begin(), fp.end(), flips.begin());
    }
    return datasets::gen_toy_infoloss(n, flips, seed, splits);
  }
  if (generator == "latent_regression") {
    const int input_dim = spec.value("input_dim", 64);
    const double noise = spec.value("noise", 0.1);
    const std::string mode_name = spec.value("mode", "modulated");
    datasets::RegressionMode mode;
    if (mode_name == "linear")
      mode = datasets::RegressionMode::linear;
    else if (mode_name == "modulated")
      mode = datasets::RegressionMode::modulated;
    else
      throw ConfigError("unknown latent_regression mode '" + mode_name + "'");
    return datasets::gen_latent_regression(n, input_dim, noise, seed, mode, splits);
  }
  if (generator == "multilabel") return datasets::gen_multilabel(n, seed, splits);
  throw ConfigError("unknown generator '" + generator + "'");
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

namespace {

struct AlgorithmRun {
  std::string name;
  Matrix features_dr, features_s, features_t;
  int feature_dim = 0;
};

json metrics_to_json(const supervised::Metrics& m) {
  json out;
  out["mae"] = m.mae;
  out["rmse"] = m.rmse;
  out["n"] = m.n;
  json cs = json::object();
  for (const auto& [threshold, fraction] : m.cumulative_scores) {
    std::ostringstream key;
    key << threshold;
    cs[key.str()] = fraction;
  }
  out["cumulative_scores"] = cs;
  return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) line += ",";
    line += fields[k];
  }
  return line + "\n";
}

std::string format_double(double v) {
  std::ostringstream oss;
  oss.precision(12);
  oss << v;
  return oss.str();
}

}  // namespace

nlohmann::json run(const nlohmann::json& config, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override, int threads) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const datasets::DatasetBundle data = dataset_from_json(config.at("dataset"), seed_override);
  const auto rows_dr = data.rows_of(datasets::Split::dr);
  const auto rows_s = data.rows_of(datasets::Split::s);
  const auto rows_t = data.rows_of(datasets::Split::t);
  const Matrix x_dr = data.x_of(datasets::Split::dr);
  const Matrix x_s = data.x_of(datasets::Split::s);
  const Matrix x_t = data.x_of(datasets::Split::t);

  const auto& supervised_cfg = config.at("supervised");
  const std::string label_column = supervised_cfg.at("label_column").get<std::string>();
  const int n_classes = supervised_cfg.value("n_classes", 16);
  const int features_used = supervised_cfg.value("features_used", 0);  // 0 = all
  const supervised::Rounding rounding = supervised_cfg.value("rounding", "raw") == std::string("floor")
                                            ? supervised::Rounding::floor
                                            : supervised::Rounding::raw;
  std::vector<double> thresholds = {0, 1, 2, 3, 4, 5};
  if (supervised_cfg.contains("thresholds"))
    thresholds = supervised_cfg.at("thresholds").get<std::vector<double>>();

  const std::vector<double> labels_s = data.label_of(datasets::Split::s, label_column);
  const std::vector<double> labels_t = data.label_of(datasets::Split::t, label_column);
  const std::vector<double> labels_dr = data.label_of(datasets::Split::dr, label_column);

  const graphs::TrainingGraph graph = graph_from_json(config.at("graph"), data, datasets::Split::dr);

  // Main network plus optional baselines, in a fixed order for reproducible
  // reports.
  std::vector<AlgorithmRun> algorithms;
  std::vector<std::string> warnings;

  auto train_net = [&](const nlohmann::json& net_cfg, const std::string& fallback_name) {
    nlohmann::json spec_json = net_cfg.contains("preset")
                                   ? presets::network_preset(net_cfg.at("preset").get<std::string>())
                                   : net_cfg;
    hierarchy::NetworkSpec spec = presets::network_from_json(spec_json);
    if (spec.name.empty()) spec.name = fallback_name;
    hierarchy::TrainedNetwork net = hierarchy::train_network(spec, x_dr, graph, threads);
    AlgorithmRun algo;
    algo.name = spec.name;
    algo.features_dr = hierarchy::extract_network(net, x_dr);
    algo.features_s = hierarchy::extract_network(net, x_s);
    algo.features_t = hierarchy::extract_network(net, x_t);
    algo.feature_dim = net.output_dim();
    for (const auto& layer : net.nodes)
      for (const auto& node : layer)
        if (const auto* ig = std::get_if<igsfa::IGSFANodeModel>(&node.node))
          for (const auto& w : ig->warnings) warnings.push_back(algo.name + ": " + w);
    return std::pair<AlgorithmRun, hierarchy::TrainedNetwork>{std::move(algo), std::move(net)};
  };

  auto [main_algo, main_net] = train_net(config.at("network"), "network");
  algorithms.push_back(std::move(main_algo));

  const auto baselines = config.value("baselines", nlohmann::json::object());
  if (baselines.contains("hgsfa")) {
    nlohmann::json cfg = baselines.at("hgsfa");
    if (cfg.is_string()) cfg = nlohmann::json{{"preset", cfg.get<std::string>()}};
    auto [algo, net] = train_net(cfg, "hgsfa");
    algorithms.push_back(std::move(algo));
  }
  if (baselines.value("pca", false)) {
    AlgorithmRun algo;
    algo.name = "pca";
    algo.feature_dim = algorithms.front().feature_dim;
    const gsfa::PCAModel pca = gsfa::train_pca(x_dr, algo.feature_dim);
    algo.features_dr = gsfa::apply_pca(pca, x_dr);
    algo.features_s = gsfa::apply_pca(pca, x_s);
    algo.features_t = gsfa::apply_pca(pca, x_t);
    algorithms.push_back(std::move(algo));
  }

  json report;
  report["dataset"] = {{"n", data.x.rows()},
                       {"input_dim", data.x.cols()},
                       {"splits", {{"dr", rows_dr.size()}, {"s", rows_s.size()}, {"t", rows_t.size()}}}};
  report["graph"] = {{"id", graph.id},
                     {"edge_normalizer", graph.edge_normalizer},
                     {"vertex_normalizer", graph.vertex_normalizer}};
  report["label_column"] = label_column;
  report["algorithms"] = json::object();

  std::string delta_csv = "algorithm,graph,feature,delta,zero_variance\n";

  // Test-data slowness uses a linear graph over the label-ordered test rows.
  std::vector<int> t_order(labels_t.size());
  std::iota(t_order.begin(), t_order.end(), 0);
  std::stable_sort(t_order.begin(), t_order.end(),
                   [&](int a, int b) { return labels_t[a] < labels_t[b]; });

  for (const auto& algo : algorithms) {
    json entry;
    const int used = features_used > 0 ? std::min(features_used, algo.feature_dim)
                                       : algo.feature_dim;
    entry["feature_dim"] = algo.feature_dim;
    entry["features_used"] = used;

    const auto estimator =
        supervised::train_soft_estimator(algo.features_s.leftCols(used), labels_s, n_classes);
    const auto estimates = supervised::soft_estimate(estimator, Matrix(algo.features_t.leftCols(used)),
                                                     rounding);
    const auto metrics = supervised::evaluate(labels_t, estimates, thresholds);
    entry["regression"] = metrics_to_json(metrics);

    std::string cs_csv = "threshold,fraction\n";
    for (const auto& [threshold, fraction] : metrics.cumulative_scores)
      cs_csv += format_double(threshold) + "," + format_double(fraction) + "\n";
    write_text_atomic((fs::path(out_dir) / ("cs_" + algo.name + ".csv")).string(), cs_csv);

    if (supervised_cfg.contains("classification_columns")) {
      json rates = json::object();
      for (const auto& jc : supervised_cfg.at("classification_columns")) {
        const std::string col = jc.get<std::string>();
        const auto cls_s = categorical_ids(data.label_of(datasets::Split::s, col));
        const auto cls_t = categorical_ids(data.label_of(datasets::Split::t, col));
        const int n_cls = 1 + *std::max_element(cls_s.begin(), cls_s.end());
        std::vector<double> as_labels(cls_s.begin(), cls_s.end());
        const auto clf =
            supervised::train_soft_estimator(algo.features_s.leftCols(used), as_labels, n_cls);
        const auto predicted = supervised::classify(clf, Matrix(algo.features_t.leftCols(used)));
        std::size_t hits = 0;
        for (std::size_t k = 0; k < predicted.size(); ++k)
          if (predicted[k] == cls_t[k]) ++hits;
        rates[col] = static_cast<double>(hits) / static_cast<double>(predicted.size());
      }
      entry["classification_rates"] = rates;
    }

    // Slowness: training graph on the DR features, linear graph on the
    // label-ordered test features.
    const auto delta_dr = gsfa::delta_of(algo.features_dr, graph);
    Matrix y_t_sorted(algo.features_t.rows(), algo.features_t.cols());
    for (std::size_t k = 0; k < t_order.size(); ++k)
      y_t_sorted.row(static_cast<Index>(k)) = algo.features_t.row(t_order[k]);
    const auto delta_t = gsfa::delta_of(y_t_sorted, graphs::linear_graph(static_cast<int>(t_order.size())));
    entry["delta_dr"] = std::vector<double>(delta_dr.deltas.data(),
                                            delta_dr.deltas.data() + delta_dr.deltas.size());
    entry["delta_test_linear"] = std::vector<double>(delta_t.deltas.data(),
                                                     delta_t.deltas.data() + delta_t.deltas.size());
    for (Index f = 0; f < delta_dr.deltas.size(); ++f)
      delta_csv += csv_join({algo.name, "train-" + graph.id, std::to_string(f),
                             format_double(delta_dr.deltas[f]),
                             delta_dr.zero_variance[f] ? "1" : "0"});
    for (Index f = 0; f < delta_t.deltas.size(); ++f)
      delta_csv += csv_join({algo.name, "test-linear", std::to_string(f),
                             format_double(delta_t.deltas[f]), delta_t.zero_variance[f] ? "1" : "0"});

    // Linear reconstruction quality; the fit set also gives the exact-theory
    // ordering against PCA.
    const auto recon = hierarchy::fit_global_reconstruction(x_dr, algo.features_dr);
    entry["e_rec"] = {{"train", hierarchy::e_rec(recon, x_dr, algo.features_dr)},
                      {"test", hierarchy::e_rec(recon, x_t, algo.features_t)}};

    report["algorithms"][algo.name] = std::move(entry);
  }

  // Best constant estimators define the chance level.
  {
    std::vector<double> sorted_t = labels_t;
    std::sort(sorted_t.begin(), sorted_t.end());
    const double median = sorted_t[sorted_t.size() / 2];
    const double mean = std::accumulate(sorted_t.begin(), sorted_t.end(), 0.0) /
                        static_cast<double>(sorted_t.size());
    const std::vector<double> const_median(labels_t.size(), median);
    const std::vector<double> const_mean(labels_t.size(), mean);
    json chance;
    chance["mae"] = supervised::evaluate(labels_t, const_median, {}).mae;
    chance["rmse"] = supervised::evaluate(labels_t, const_mean, {}).rmse;
    chance["e_rec"] = 1.0;
    report["chance"] = chance;
  }
  report["warnings"] = warnings;

  write_text_atomic((fs::path(out_dir) / "delta_report.csv").string(), delta_csv);

  std::string erec_csv = "algorithm,e_rec_train,e_rec_test\n";
  for (const auto& algo : algorithms) {
    const auto& entry = report["algorithms"][algo.name]["e_rec"];
    erec_csv += csv_join({algo.name, format_double(entry["train"].get<double>()),
                          format_double(entry["test"].get<double>())});
  }
  erec_csv += csv_join({"chance", "1", "1"});
  write_text_atomic((fs::path(out_dir) / "erec.csv").string(), erec_csv);

  write_text_atomic((fs::path(out_dir) / "metrics.json").string(), report.dump(2) + "\n");

  if (config.value("outputs", nlohmann::json::object()).value("save_model", false))
    model_io::save_network((fs::path(out_dir) / "model.hgsf").string(), main_net,
                           nullptr);
  return report;
}

}  // namespace higsfa::experiment

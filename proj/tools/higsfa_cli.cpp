// Command-line front end: synthetic data generation, training, feature
// extraction, reconstruction, evaluation and full experiment runs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "higsfa/experiment.hpp"
#include "higsfa/hierarchy.hpp"
#include "higsfa/kernels.hpp"
#include "higsfa/model_io.hpp"
#include "higsfa/presets.hpp"
#include "higsfa/supervised.hpp"

namespace {

using higsfa::ConfigError;
using higsfa::IoError;
using higsfa::Matrix;
using higsfa::NumericError;
namespace fs = std::filesystem;

nlohmann::json load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config '" + path + "': " + e.what());
  }
}

struct CommonArgs {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  auto* opt = cmd->add_option("--config", args.config, "experiment config (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t s) { args.seed = s; }, "override the dataset seed");
  cmd->add_option("--threads", args.threads, "worker threads for layer training");
}

int cmd_gen(const CommonArgs& args) {
  const auto config = load_config(args.config);
  const auto& spec = config.contains("dataset") ? config.at("dataset") : config;
  const auto data = higsfa::experiment::dataset_from_json(spec, args.seed);
  fs::create_directories(args.out);
  const std::string path = (fs::path(args.out) / "dataset.hgsd").string();
  higsfa::datasets::save_dataset(path, data);
  std::cout << "wrote " << path << " (" << data.x.rows() << " x " << data.x.cols() << ")\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& preset) {
  auto config = load_config(args.config);
  if (!preset.empty()) config["network"] = {{"preset", preset}};
  const auto data = higsfa::experiment::dataset_from_json(config.at("dataset"), args.seed);
  const auto graph =
      higsfa::experiment::graph_from_json(config.at("graph"), data, higsfa::datasets::Split::dr);

  nlohmann::json net_json = config.at("network").contains("preset")
                                ? higsfa::presets::network_preset(
                                      config.at("network").at("preset").get<std::string>())
                                : config.at("network");
  auto spec = higsfa::presets::network_from_json(net_json);
  const Matrix x_dr = data.x_of(higsfa::datasets::Split::dr);
  const auto net = higsfa::hierarchy::train_network(spec, x_dr, graph, args.threads);

  const Matrix y_dr = higsfa::hierarchy::extract_network(net, x_dr);
  const auto recon = higsfa::hierarchy::fit_global_reconstruction(x_dr, y_dr);

  fs::create_directories(args.out);
  const std::string path = (fs::path(args.out) / "model.hgsf").string();
  higsfa::model_io::save_network(path, net, &recon);
  std::cout << "trained '" << net.spec.name << "' on " << x_dr.rows() << " samples; wrote " << path
            << "\n";
  for (const auto& layer : net.nodes)
    for (const auto& node : layer)
      if (const auto* ig = std::get_if<higsfa::igsfa::IGSFANodeModel>(&node.node))
        for (const auto& w : ig->warnings) std::cout << "warning: " << w << "\n";
  return 0;
}

int cmd_extract(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  const auto model = higsfa::model_io::load_network(model_path);
  auto data = higsfa::datasets::load_dataset(data_path);
  const Matrix y = higsfa::hierarchy::extract_network(model.network, data.x);
  higsfa::datasets::DatasetBundle features;
  features.x = y;
  features.labels = data.labels;
  features.latents = data.latents;
  features.split = data.split;
  higsfa::datasets::save_dataset(out_path, features);
  std::cout << "wrote " << out_path << " (" << y.rows() << " x " << y.cols() << ")\n";
  return 0;
}

int cmd_reconstruct(const std::string& model_path, const std::string& data_path,
                    const std::string& out_path) {
  const auto model = higsfa::model_io::load_network(model_path);
  if (!model.reconstruction)
    throw ConfigError("model has no global reconstruction component; retrain with 'train'");
  auto data = higsfa::datasets::load_dataset(data_path);
  const Matrix y = higsfa::hierarchy::extract_network(model.network, data.x);
  const Matrix x_hat = higsfa::hierarchy::reconstruct_global(*model.reconstruction, y);
  const double error = higsfa::hierarchy::e_rec(*model.reconstruction, data.x, y);

  higsfa::datasets::DatasetBundle recon;
  recon.x = x_hat;
  recon.labels = data.labels;
  recon.split = data.split;
  higsfa::datasets::save_dataset(out_path, recon);
  std::cout << "wrote " << out_path << "; e_rec " << error << "\n";
  return 0;
}

int cmd_evaluate(const std::string& features_path, const std::string& label_column, int n_classes,
                 int features_used, const std::vector<double>& thresholds,
                 const std::string& out_dir) {
  const auto data = higsfa::datasets::load_dataset(features_path);
  const Matrix y_s = data.x_of(higsfa::datasets::Split::s);
  const Matrix y_t = data.x_of(higsfa::datasets::Split::t);
  const auto labels_s = data.label_of(higsfa::datasets::Split::s, label_column);
  const auto labels_t = data.label_of(higsfa::datasets::Split::t, label_column);

  const int used = features_used > 0 ? std::min<int>(features_used, static_cast<int>(y_s.cols()))
                                     : static_cast<int>(y_s.cols());
  const auto estimator =
      higsfa::supervised::train_soft_estimator(y_s.leftCols(used), labels_s, n_classes);
  const auto estimates = higsfa::supervised::soft_estimate(estimator, Matrix(y_t.leftCols(used)));
  const auto metrics = higsfa::supervised::evaluate(labels_t, estimates, thresholds);

  nlohmann::ordered_json out;
  out["label_column"] = label_column;
  out["n_classes"] = n_classes;
  out["features_used"] = used;
  out["mae"] = metrics.mae;
  out["rmse"] = metrics.rmse;
  nlohmann::ordered_json cs = nlohmann::ordered_json::object();
  for (const auto& [t, f] : metrics.cumulative_scores) cs[std::to_string(t)] = f;
  out["cumulative_scores"] = cs;
  fs::create_directories(out_dir);
  higsfa::experiment::write_text_atomic((fs::path(out_dir) / "metrics.json").string(),
                                        out.dump(2) + "\n");
  std::cout << "MAE " << metrics.mae << "  RMSE " << metrics.rmse << "  (n=" << metrics.n << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised dimensionality reduction with graph-based slow feature analysis"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, run_args;
  std::string preset;
  std::string model_path, data_path, out_path;
  std::string features_path, label_column;
  int n_classes = 16, features_used = 0;
  std::vector<double> thresholds = {0, 1, 2, 3, 4, 5};

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen, gen_args, true);

  auto* train = app.add_subcommand("train", "train a network and save the model");
  add_common(train, train_args, true);
  train->add_option("--preset", preset, "network preset overriding the config");

  auto* extract = app.add_subcommand("extract", "extract features with a trained model");
  extract->add_option("--model", model_path, "model file")->required();
  extract->add_option("--data", data_path, "dataset file")->required();
  extract->add_option("--out", out_path, "output features file")->required();

  auto* reconstruct = app.add_subcommand("reconstruct", "linearly reconstruct inputs");
  reconstruct->add_option("--model", model_path, "model file")->required();
  reconstruct->add_option("--data", data_path, "dataset file")->required();
  reconstruct->add_option("--out", out_path, "output reconstruction file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "supervised step on extracted features");
  evaluate->add_option("--features", features_path, "features file (from 'extract')")->required();
  evaluate->add_option("--label-column", label_column, "label column")->required();
  evaluate->add_option("--n-classes", n_classes, "estimator classes");
  evaluate->add_option("--features-used", features_used, "leading features for the estimator");
  evaluate->add_option("--thresholds", thresholds, "cumulative score thresholds");
  evaluate->add_option("--out", out_path, "output directory")->required();

  auto* run = app.add_subcommand("run", "full pipeline: data, training, evaluation, reports");
  add_common(run, run_args, true);

  auto* inspect = app.add_subcommand("inspect-model", "print a model summary");
  inspect->add_option("--model", model_path, "model file")->required();

  auto* presets_cmd = app.add_subcommand("presets", "list shipped network presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_args);
    if (train->parsed()) return cmd_train(train_args, preset);
    if (extract->parsed()) return cmd_extract(model_path, data_path, out_path);
    if (reconstruct->parsed()) return cmd_reconstruct(model_path, data_path, out_path);
    if (evaluate->parsed())
      return cmd_evaluate(features_path, label_column, n_classes, features_used, thresholds,
                          out_path);
    if (run->parsed()) {
      const auto config = load_config(run_args.config);
      higsfa::experiment::run(config, run_args.out, run_args.seed, run_args.threads);
      std::cout << "reports written to " << run_args.out << "\n";
      return 0;
    }
    if (inspect->parsed()) {
      std::cout << higsfa::model_io::describe_network(higsfa::model_io::load_network(model_path));
      return 0;
    }
    if (presets_cmd->parsed()) {
      for (const auto& name : higsfa::presets::preset_names()) std::cout << name << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "higsfa/hierarchy.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace higsfa::hierarchy {

namespace {

int axis_nodes(int in, int fan, int stride, const std::string& what, int layer) {
  const std::string where = what + " of layer " + std::to_string(layer);
  if (fan < 1 || stride < 1) throw ConfigError(where + ": fan-in and stride must be positive");
  if (fan > in)
    throw ConfigError(where + ": fan-in " + std::to_string(fan) + " exceeds input extent " +
                      std::to_string(in));
  if (stride > fan)
    throw ConfigError(where + ": stride " + std::to_string(stride) + " exceeds fan-in " +
                      std::to_string(fan) + ", leaving coverage gaps");
  if ((in - fan) % stride != 0)
    throw ConfigError(where + ": extent " + std::to_string(in) + " is not tiled exactly by fan-in " +
                      std::to_string(fan) + " and stride " + std::to_string(stride));
  return (in - fan) / stride + 1;
}

// Runs f(i) for i in [0, n); rethrows the first worker exception.
void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min(threads, n);
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Matrix gather_columns(const Matrix& x, const std::vector<int>& cols) {
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(k) = x.col(cols[k]);
  return out;
}

expansions::ExpansionSpec resolve_expansion(const LayerSpec& layer, int input_dim) {
  if (layer.expansion.terms.empty()) return expansions::ExpansionSpec::identity(input_dim);
  return layer.expansion;
}

}  // namespace

WiringPlan build_network(NetworkSpec& spec) {
  if (spec.layers.empty()) throw ConfigError("network needs at least one layer");
  WiringPlan plan;
  int below_rows = spec.input_shape[0];
  int below_cols = spec.input_shape[1];
  int below_unit_dim = 1;  // layer 0 units are single values

  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    LayerSpec& layer = spec.layers[l];
    LayerWiring wiring;
    wiring.rows = axis_nodes(below_rows, layer.fan_in[0], layer.stride[0], "rows",
                             static_cast<int>(l + 1));
    wiring.cols = axis_nodes(below_cols, layer.fan_in[1], layer.stride[1], "cols",
                             static_cast<int>(l + 1));
    if (layer.grid_shape[0] != 0 || layer.grid_shape[1] != 0) {
      if (layer.grid_shape[0] != wiring.rows || layer.grid_shape[1] != wiring.cols)
        throw ConfigError("layer " + std::to_string(l + 1) + " declares a " +
                          std::to_string(layer.grid_shape[0]) + "x" +
                          std::to_string(layer.grid_shape[1]) + " grid but wiring yields " +
                          std::to_string(wiring.rows) + "x" + std::to_string(wiring.cols));
    }
    layer.grid_shape = {wiring.rows, wiring.cols};
    wiring.node_input_dim = layer.fan_in[0] * layer.fan_in[1] * below_unit_dim;

    int effective_input = wiring.node_input_dim;
    if (layer.pre_pca_dim) {
      if (*layer.pre_pca_dim < 1 || *layer.pre_pca_dim > wiring.node_input_dim)
        throw ConfigError("layer " + std::to_string(l + 1) + " pre-PCA dimension out of range");
      effective_input = *layer.pre_pca_dim;
    }
    const auto expansion = resolve_expansion(layer, effective_input);
    const int expanded = expansion.output_dim(effective_input);
    if (layer.output_dim > expanded)
      throw ConfigError("layer " + std::to_string(l + 1) + " output dimension " +
                        std::to_string(layer.output_dim) + " exceeds expanded dimension " +
                        std::to_string(expanded));

    wiring.nodes.resize(static_cast<std::size_t>(wiring.rows) * wiring.cols);
    std::vector<bool> covered(static_cast<std::size_t>(below_rows) * below_cols, false);
    for (int r = 0; r < wiring.rows; ++r) {
      for (int c = 0; c < wiring.cols; ++c) {
        NodeWiring& node = wiring.nodes[static_cast<std::size_t>(r) * wiring.cols + c];
        node.input_columns.reserve(wiring.node_input_dim);
        for (int fr = 0; fr < layer.fan_in[0]; ++fr) {
          for (int fc = 0; fc < layer.fan_in[1]; ++fc) {
            const int ur = r * layer.stride[0] + fr;
            const int uc = c * layer.stride[1] + fc;
            covered[static_cast<std::size_t>(ur) * below_cols + uc] = true;
            const int unit = ur * below_cols + uc;
            for (int d = 0; d < below_unit_dim; ++d)
              node.input_columns.push_back(unit * below_unit_dim + d);
          }
        }
      }
    }
    for (std::size_t u = 0; u < covered.size(); ++u)
      if (!covered[u])
        throw ConfigError("layer " + std::to_string(l + 1) + " leaves input unit " +
                          std::to_string(u) + " uncovered");

    plan.layers.push_back(std::move(wiring));
    below_rows = plan.layers.back().rows;
    below_cols = plan.layers.back().cols;
    below_unit_dim = layer.output_dim;
  }

  if (below_rows != 1 || below_cols != 1)
    throw ConfigError("top layer must reduce to a single node, got " + std::to_string(below_rows) +
                      "x" + std::to_string(below_cols));
  plan.output_dim = below_unit_dim;
  return plan;
}

int NodeModel::output_dim() const {
  if (const auto* ig = std::get_if<igsfa::IGSFANodeModel>(&node)) return ig->output_dim;
  return std::get<GsfaNodeModel>(node).gsfa.n_features;
}

Matrix NodeModel::extract(const Matrix& x) const {
  const Matrix* input = &x;
  Matrix reduced;
  if (pre_pca) {
    reduced = gsfa::apply_pca(*pre_pca, x);
    input = &reduced;
  }
  if (const auto* ig = std::get_if<igsfa::IGSFANodeModel>(&node))
    return igsfa::extract_node(*ig, *input);
  const auto& plain = std::get<GsfaNodeModel>(node);
  Matrix xc = *input;
  xc.rowwise() -= plain.input_mean.transpose();
  return gsfa::extract_gsfa(plain.gsfa, plain.expansion.expand(xc));
}

TrainedNetwork train_network(const NetworkSpec& spec, const Matrix& x,
                             const graphs::TrainingGraph& g, int threads) {
  TrainedNetwork net;
  net.spec = spec;
  net.wiring = build_network(net.spec);
  if (x.cols() != net.input_dim())
    throw ConfigError("input has " + std::to_string(x.cols()) + " columns but the network expects " +
                      std::to_string(net.input_dim()));
  if (x.rows() != g.n_samples) throw ConfigError("graph sample count mismatch");

  Matrix current = x;
  net.nodes.resize(spec.layers.size());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerSpec& layer = net.spec.layers[l];
    const LayerWiring& wiring = net.wiring.layers[l];
    const int n_nodes = static_cast<int>(wiring.nodes.size());
    auto& models = net.nodes[l];
    models.resize(n_nodes);

    Matrix next(x.rows(), static_cast<Index>(n_nodes) * layer.output_dim);
    parallel_for(n_nodes, threads, [&](int idx) {
      try {
        const Matrix slice = gather_columns(current, wiring.nodes[idx].input_columns);
        NodeModel& model = models[idx];
        const Matrix* node_input = &slice;
        Matrix reduced;
        if (layer.pre_pca_dim) {
          model.pre_pca = gsfa::train_pca(slice, *layer.pre_pca_dim);
          reduced = gsfa::apply_pca(*model.pre_pca, slice);
          node_input = &reduced;
        }
        const auto expansion = resolve_expansion(layer, static_cast<int>(node_input->cols()));
        if (layer.node_kind == NodeKind::igsfa) {
          model.node = igsfa::train_node(*node_input, g, layer.output_dim, layer.selector,
                                         expansion, layer.scaling);
        } else {
          GsfaNodeModel plain;
          plain.input_dim = static_cast<int>(node_input->cols());
          plain.input_mean = node_input->colwise().mean();
          plain.expansion = expansion;
          Matrix xc = *node_input;
          xc.rowwise() -= plain.input_mean.transpose();
          gsfa::TrainOptions opts;
          opts.cap_features_to_rank = true;
          plain.gsfa = gsfa::train_gsfa(expansion.expand(xc), g, layer.output_dim, opts);
          model.node = std::move(plain);
        }
        next.middleCols(static_cast<Index>(idx) * layer.output_dim, layer.output_dim)
            .leftCols(model.output_dim()) = model.extract(slice);
        // A rank-capped node can emit fewer features; pad deterministically.
        for (int d = model.output_dim(); d < layer.output_dim; ++d)
          next.col(static_cast<Index>(idx) * layer.output_dim + d).setZero();
      } catch (const std::exception& e) {
        const int r = idx / wiring.cols;
        const int c = idx % wiring.cols;
        throw NumericError("layer " + std::to_string(l + 1) + " node (" + std::to_string(r) + "," +
                           std::to_string(c) + "): " + e.what());
      }
    });
    current = std::move(next);
  }
  return net;
}

Matrix extract_network(const TrainedNetwork& net, const Matrix& x) {
  if (x.cols() != net.input_dim()) throw ConfigError("input dimension mismatch in extraction");
  Matrix current = x;
  for (std::size_t l = 0; l < net.nodes.size(); ++l) {
    const LayerSpec& layer = net.spec.layers[l];
    const LayerWiring& wiring = net.wiring.layers[l];
    Matrix next(x.rows(), static_cast<Index>(wiring.nodes.size()) * layer.output_dim);
    for (std::size_t idx = 0; idx < wiring.nodes.size(); ++idx) {
      const Matrix slice = gather_columns(current, wiring.nodes[idx].input_columns);
      const NodeModel& model = net.nodes[l][idx];
      next.middleCols(static_cast<Index>(idx) * layer.output_dim, layer.output_dim)
          .leftCols(model.output_dim()) = model.extract(slice);
      for (int d = model.output_dim(); d < layer.output_dim; ++d)
        next.col(static_cast<Index>(idx) * layer.output_dim + d).setZero();
    }
    current = std::move(next);
  }
  return current;
}

GlobalReconstructionModel fit_global_reconstruction(const Matrix& x_train, const Matrix& y_train) {
  if (x_train.rows() != y_train.rows()) throw ConfigError("sample count mismatch in reconstruction fit");
  if (x_train.rows() <= y_train.cols())
    throw ConfigError("reconstruction fit needs more samples than feature dimensions");
  const Index n = y_train.rows();
  const Index d = y_train.cols();
  Eigen::MatrixXd design(n, d + 1);
  design.leftCols(d) = y_train;
  design.col(d).setOnes();
  const Eigen::MatrixXd theta = design.colPivHouseholderQr().solve(Eigen::MatrixXd(x_train));
  GlobalReconstructionModel m;
  m.map = theta.topRows(d).transpose();
  m.offset = theta.row(d).transpose();
  m.input_mean = x_train.colwise().mean();
  return m;
}

Matrix reconstruct_global(const GlobalReconstructionModel& m, const Matrix& y) {
  if (y.cols() != m.map.cols()) throw ConfigError("feature dimension mismatch in reconstruction");
  Matrix x = y * m.map.transpose();
  x.rowwise() += m.offset.transpose();
  return x;
}

double e_rec(const GlobalReconstructionModel& m, const Matrix& x_eval, const Matrix& y_eval) {
  const Matrix x_hat = reconstruct_global(m, y_eval);
  const double residual = (x_eval - x_hat).squaredNorm();
  const double energy = (x_eval.rowwise() - m.input_mean.transpose()).squaredNorm();
  if (energy <= 0.0) throw NumericError("evaluation data has zero variance");
  return residual / energy;
}

}  // namespace higsfa::hierarchy

#include "mogat/gat.hpp"

#include <cmath>
#include <random>

#include "mogat/error.hpp"
#include "mogat/ops.hpp"

namespace mogat {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor glorot(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

std::string to_string(Readout readout) { return readout == Readout::kMean ? "mean" : "flatten"; }

Readout parse_readout(const std::string& text) {
  if (text == "mean") return Readout::kMean;
  if (text == "flatten") return Readout::kFlatten;
  throw ConfigError("unknown readout '" + text + "' (expected mean or flatten)");
}

std::size_t ModelConfig::readout_dim() const {
  const std::size_t last = dims.back();
  return readout == Readout::kMean ? last : last * num_nodes;
}

void ModelConfig::validate() const {
  if (dims.size() < 2) throw ConfigError("model needs at least one attention layer");
  for (std::size_t d : dims)
    if (d == 0) throw ConfigError("model dimensions must be positive");
  if (num_classes < 2) throw ConfigError("model needs at least two classes");
  if (readout == Readout::kFlatten && num_nodes == 0) throw ConfigError("flatten readout needs num_nodes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw ConfigError("batch-norm momentum must lie in (0, 1]");
  if (!(bn_epsilon > 0.0)) throw ConfigError("batch-norm epsilon must be > 0");
}

std::vector<Tensor*> GatModel::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out.push_back(&layers[l].weight);
    out.push_back(&layers[l].attention);
    out.push_back(&norms[l].gamma);
    out.push_back(&norms[l].beta);
  }
  out.push_back(&head_weight);
  out.push_back(&head_bias);
  return out;
}

std::vector<const Tensor*> GatModel::parameters() const {
  auto mutable_params = const_cast<GatModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::string> GatModel::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    names.push_back(p + "weight");
    names.push_back(p + "attention");
    names.push_back(p + "bn_gamma");
    names.push_back(p + "bn_beta");
  }
  names.push_back("head.weight");
  names.push_back("head.bias");
  return names;
}

GatModel init_params(std::uint64_t seed, const ModelConfig& config) {
  config.validate();
  GatModel model;
  model.config = config;
  model.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < config.num_layers(); ++l) {
    const std::size_t fin = config.dims[l];
    const std::size_t fout = config.dims[l + 1];
    GatLayerParams layer;
    layer.weight = glorot(rng, fin, fout, fin, fout);
    layer.attention = glorot(rng, 2 * fout, 1, 2 * fout, 1);
    model.layers.push_back(std::move(layer));
    model.norms.push_back({Tensor(1, fout, 1.0), Tensor(1, fout, 0.0), Tensor(1, fout, 0.0), Tensor(1, fout, 1.0)});
  }
  const std::size_t rd = config.readout_dim();
  model.head_weight = glorot(rng, rd, config.num_classes, rd, config.num_classes);
  model.head_bias = Tensor(1, config.num_classes, 0.0);
  return model;
}

GraphBatch make_batch(const GraphInputs& inputs, std::span<const std::size_t> samples) {
  GraphBatch batch;
  batch.batch_size = samples.size();
  batch.num_nodes = inputs.num_nodes;
  const std::size_t N = inputs.num_nodes;
  const std::size_t d = inputs.channels;
  std::vector<double> data;
  data.reserve(samples.size() * N * d);
  for (std::size_t s : samples) {
    if (s >= inputs.grids.size()) throw ShapeError("make_batch: sample index out of range");
    data.insert(data.end(), inputs.grids[s].begin(), inputs.grids[s].end());
  }
  batch.features = Tensor(samples.size() * N, d, std::move(data));
  const std::size_t E = inputs.edges.size();
  batch.src.reserve(E * samples.size());
  batch.dst.reserve(E * samples.size());
  for (std::size_t b = 0; b < samples.size(); ++b) {
    for (std::size_t e = 0; e < E; ++e) {
      batch.src.push_back(b * N + inputs.edges.src[e]);
      batch.dst.push_back(b * N + inputs.edges.dst[e]);
    }
  }
  return batch;
}

LayerOutput gat_layer(Var h, Var weight, Var attention, std::span<const std::size_t> src,
                      std::span<const std::size_t> dst, double slope) {
  const std::size_t nodes = h.value().rows();
  std::vector<char> has_edge(nodes, 0);
  for (std::size_t v : dst)
    if (v < nodes) has_edge[v] = 1;
  for (std::size_t v = 0; v < nodes; ++v)
    if (!has_edge[v]) throw ShapeError("gat_layer: node " + std::to_string(v) + " has no incoming edge or self-loop");

  Var wh = ops::matmul(h, weight);
  Var scores = ops::leaky_relu(ops::attention_logits(wh, attention, src, dst), slope);
  Var alpha = ops::segment_softmax(scores, dst, nodes);
  Var out = ops::segment_weighted_sum(alpha, wh, src, dst, nodes);
  return {out, alpha};
}

Var batch_norm(Var x, Var gamma, Var beta, const BatchNormParams& params, double epsilon, bool training,
               BatchStats* stats) {
  Tape& tape = x.tape();
  Var mean, var;
  if (training) {
    if (x.value().rows() < 2) throw ShapeError("batch_norm: training needs at least 2 rows");
    mean = ops::mean_over_axis(x, 0);
    var = ops::variance_over_axis(x, 0);
    if (stats) *stats = {mean.value(), var.value()};
  } else {
    mean = tape.constant(params.running_mean);
    var = tape.constant(params.running_var);
  }
  Var centered = ops::add_row(x, ops::mul_scalar(mean, -1.0));
  Var inv_std = ops::pow_scalar(ops::add_scalar(var, epsilon), -0.5);
  Var normed = ops::mul_row(centered, inv_std);
  return ops::add_row(ops::mul_row(normed, gamma), beta);
}

void update_running_stats(BatchNormParams& params, const BatchStats& stats, double momentum) {
  for (std::size_t c = 0; c < params.running_mean.size(); ++c) {
    params.running_mean[c] = (1.0 - momentum) * params.running_mean[c] + momentum * stats.mean[c];
    params.running_var[c] = (1.0 - momentum) * params.running_var[c] + momentum * stats.var[c];
  }
}

ForwardPass forward(Tape& tape, const GatModel& model, const GraphBatch& batch, const ForwardOptions& options) {
  std::vector<Var> params;
  for (const Tensor* p : model.parameters()) params.push_back(options.track_grad ? tape.leaf(*p) : tape.constant(*p));
  return forward(tape, model, batch, options, params);
}

ForwardPass forward(Tape& tape, const GatModel& model, const GraphBatch& batch, const ForwardOptions& options,
                    std::span<const Var> params) {
  const auto& cfg = model.config;
  if (params.size() != 4 * model.layers.size() + 2)
    throw ShapeError("forward: expected " + std::to_string(4 * model.layers.size() + 2) + " parameter handles");
  if (batch.features.cols() != cfg.dims.front())
    throw ShapeError("forward: input has " + std::to_string(batch.features.cols()) + " channels, model expects " +
                     std::to_string(cfg.dims.front()));
  if (cfg.num_nodes != 0 && batch.num_nodes != cfg.num_nodes)
    throw ShapeError("forward: batch graph has " + std::to_string(batch.num_nodes) + " nodes, model expects " +
                     std::to_string(cfg.num_nodes));
  ForwardPass pass;
  pass.params.assign(params.begin(), params.end());

  Var h = tape.constant(batch.features);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Var* p = &pass.params[4 * l];
    LayerOutput layer = gat_layer(h, p[0], p[1], batch.src, batch.dst, cfg.attention_slope);
    pass.attention.push_back(layer.alpha.value());
    BatchStats stats;
    h = batch_norm(layer.out, p[2], p[3], model.norms[l], cfg.bn_epsilon, options.training, &stats);
    if (options.training) pass.stats.push_back(std::move(stats));
    h = ops::leaky_relu(h, cfg.activation_slope);
    h = ops::dropout(h, cfg.dropout, mix(options.seed, l), options.training);
  }

  Var pooled = cfg.readout == Readout::kMean
                   ? ops::block_mean_rows(h, batch.num_nodes)
                   : ops::reshape(h, batch.batch_size, batch.num_nodes * h.value().cols());
  const std::size_t head = 4 * model.layers.size();
  Var logits = ops::add_row(ops::matmul(pooled, pass.params[head]), pass.params[head + 1]);
  pass.log_probs = ops::log_softmax_rows(logits);
  return pass;
}

Tensor predict_log_probs(const GatModel& model, const GraphBatch& batch) {
  Tape tape;
  return forward(tape, model, batch, ForwardOptions{}).log_probs.value();
}

}  // namespace mogat

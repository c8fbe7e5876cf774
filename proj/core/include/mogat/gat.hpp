#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mogat/ppi.hpp"
#include "mogat/tape.hpp"

namespace mogat {

enum class Readout { kMean, kFlatten };

std::string to_string(Readout readout);
Readout parse_readout(const std::string& text);

struct ModelConfig {
  // [f_in, h1, ..., hL]; one attention layer per consecutive pair.
  std::vector<std::size_t> dims{0, 64, 64, 32, 32};
  std::size_t num_classes = 2;
  // Needed by the flatten readout; also checked against every batch.
  std::size_t num_nodes = 0;
  Readout readout = Readout::kMean;
  double dropout = 0.5;
  // Slope inside the attention score, and of the activation after batch norm.
  double attention_slope = 0.2;
  double activation_slope = 0.01;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  std::size_t num_layers() const { return dims.empty() ? 0 : dims.size() - 1; }
  std::size_t readout_dim() const;
  void validate() const;
};

struct GatLayerParams {
  Tensor weight;     // f_in x f_out
  Tensor attention;  // 2 f_out x 1, destination half first
};

struct BatchNormParams {
  Tensor gamma;  // 1 x C
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
};

struct GatModel {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::vector<GatLayerParams> layers;
  std::vector<BatchNormParams> norms;
  Tensor head_weight;  // readout_dim x K
  Tensor head_bias;    // 1 x K

  /// Trainable tensors in a fixed order: per layer W, a, gamma, beta; then
  /// the head weight and bias.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
};

/// Glorot-uniform weights and attention vectors, unit gamma, zero beta,
/// running statistics (0, 1), zero head bias. Deterministic in `seed`.
GatModel init_params(std::uint64_t seed, const ModelConfig& config);

/// B samples stacked into one block-diagonal graph: node v of sample b is
/// row b * num_nodes + v.
struct GraphBatch {
  std::size_t batch_size = 0;
  std::size_t num_nodes = 0;
  Tensor features;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
};

GraphBatch make_batch(const GraphInputs& inputs, std::span<const std::size_t> samples);

struct LayerOutput {
  Var out;
  Var alpha;  // E x 1 attention coefficients, normalized per destination
};

/// One attention layer: logits a' [W h_i || W h_j] through LeakyReLU,
/// softmax over each destination's incoming edges, then sum alpha_ij W h_j.
/// No activation is applied here.
LayerOutput gat_layer(Var h, Var weight, Var attention, std::span<const std::size_t> src,
                      std::span<const std::size_t> dst, double slope);

struct BatchStats {
  Tensor mean;
  Tensor var;  // population variance
};

/// Batch normalization over rows. Training uses batch statistics (and
/// reports them through `stats`); evaluation uses the running statistics.
Var batch_norm(Var x, Var gamma, Var beta, const BatchNormParams& params, double epsilon, bool training,
               BatchStats* stats = nullptr);

void update_running_stats(BatchNormParams& params, const BatchStats& stats, double momentum);

struct ForwardOptions {
  bool training = false;
  std::uint64_t seed = 0;  // dropout masks
  bool track_grad = false;
};

struct ForwardPass {
  Var log_probs;             // B x K
  std::vector<Var> params;   // same order as GatModel::parameters()
  std::vector<BatchStats> stats;
  std::vector<Tensor> attention;  // per layer, E x 1
};

ForwardPass forward(Tape& tape, const GatModel& model, const GraphBatch& batch, const ForwardOptions& options);
/// Same, with parameter values taken from `params` (ordered as
/// GatModel::parameters()) instead of the model; running statistics still
/// come from the model.
ForwardPass forward(Tape& tape, const GatModel& model, const GraphBatch& batch, const ForwardOptions& options,
                    std::span<const Var> params);

/// Evaluation-mode log-probabilities (B x K).
Tensor predict_log_probs(const GatModel& model, const GraphBatch& batch);

/// Versioned JSON checkpoint holding the config, seed, and every tensor.
/// Save followed by load reproduces each value bit for bit.
void save_checkpoint(const GatModel& model, const std::filesystem::path& path);
GatModel load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_json(const GatModel& model);
GatModel checkpoint_from_json(const std::string& text);

}  // namespace mogat

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mogat/gat.hpp"
#include "mogat/omics.hpp"
#include "mogat/ppi.hpp"

namespace mogat {

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  std::size_t patience = 0;  // 0 disables early stopping

  /// Throws ConfigError when an invariant fails (epochs >= 1, lr > 0, k >= 2,
  /// betas in [0, 1), epsilon > 0).
  void validate() const;
};

/// Mean over rows of -log_probs(i, targets[i]).
Var nll_loss(Var log_probs, std::span<const int> targets);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One bias-corrected Adam update at step t >= 1. State tensors are created
/// as zeros on first use.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamHyper& hyper, std::size_t t);

struct TrainResult {
  GatModel model;
  double initial_loss = 0.0;          // training-split loss before the first update
  std::vector<double> loss_history;   // mean minibatch loss per epoch
};

/// NLL of `samples` with batch statistics and without dropout; the quantity
/// reported as `initial_loss`.
double training_split_loss(const GatModel& model, const GraphInputs& inputs, std::span<const int> targets,
                           std::span<const std::size_t> samples);

/// Fresh init_params(model_seed) then `epochs` passes of Adam over shuffled
/// minibatches. Throws ConfigError if the split holds fewer than two classes.
TrainResult train_fold(const GraphInputs& inputs, std::span<const int> targets,
                       std::span<const std::size_t> train_samples, const ModelConfig& model_config,
                       const TrainConfig& config, std::uint64_t model_seed);

/// Arg-max class per sample under evaluation mode.
std::vector<int> predict(const GatModel& model, const GraphInputs& inputs, std::span<const std::size_t> samples,
                         std::size_t batch_size = 256);

/// Stratified split: each class is shuffled with `seed` and dealt round-robin,
/// continuing the deal position across classes. Throws CvInfeasibleError
/// naming the first class with fewer than k samples.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> targets, std::size_t num_classes,
                                                       std::size_t k, std::uint64_t seed,
                                                       const std::vector<std::string>& class_names = {});

struct FoldMetrics {
  double accuracy = 0.0;  // fraction in [0, 1]
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  std::size_t loss_history_len = 0;
};

struct CvReport {
  TrainConfig config;
  std::optional<ModelConfig> model;
  std::vector<FoldMetrics> folds;
  FoldMetrics mean;
  FoldMetrics std;  // sample (n - 1) standard deviation
  std::uint64_t seed = 0;

  std::string to_json() const;
  /// e.g. "accuracy 94.68% ± 0.0060"
  std::string summary_line() const;
};

struct FoldOutcome {
  std::vector<int> predictions;  // aligned with the test samples
  std::size_t loss_history_len = 0;
};

/// Trains on `train` and predicts `test` for fold `fold`.
using FoldRunner =
    std::function<FoldOutcome(std::span<const std::size_t> train, std::span<const std::size_t> test, std::size_t fold)>;

/// Generic k-fold harness: builds stratified folds, runs every fold (in
/// parallel threads when asked), and merges metrics in fold order.
CvReport cross_validate(std::span<const int> targets, std::size_t num_classes, const TrainConfig& config,
                        const FoldRunner& runner, bool parallel_folds = false,
                        const std::vector<std::string>& class_names = {});

struct CvRun {
  CvReport report;
  std::vector<GatModel> models;  // one per fold, evaluation mode
  std::vector<int> predictions;  // out-of-fold prediction for every sample
  std::vector<double> initial_losses;
  std::vector<std::vector<double>> loss_histories;
};

/// GAT cross-validation; fold f uses model seed config.seed + f.
CvRun cross_validate_gat(const GraphInputs& inputs, std::span<const int> targets, const LabelEncoding& encoding,
                         const ModelConfig& model_config, const TrainConfig& config, bool parallel_folds = false);

/// Summary statistics as reported: arithmetic mean and sample sd.
double mean_of(std::span<const double> values);
double sample_sd(std::span<const double> values);

}  // namespace mogat

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "mogat/gat.hpp"
#include "mogat/lasso.hpp"
#include "mogat/omics.hpp"
#include "mogat/pipeline.hpp"
#include "mogat/synth.hpp"
#include "mogat/training.hpp"

using namespace mogat;

namespace {

PreparedData preset_data() {
  const SynthDataset d = generate(complementary_preset(0));
  std::vector<OmicsMatrix> layers{log2_counts(d.layers[0]), d.layers[1], d.layers[2]};
  return prepare_graph_data(layers, d.labels, d.graph, d.feature_map);
}

const PreparedData& shared_data() {
  static const PreparedData data = preset_data();
  return data;
}

void BM_GatForward(benchmark::State& state) {
  const PreparedData& data = shared_data();
  const ModelConfig cfg = model_config_for(data, {16, 16}, Readout::kMean, 0.5);
  const GatModel model = init_params(0, cfg);
  std::vector<std::size_t> ids(static_cast<std::size_t>(state.range(0)));
  std::iota(ids.begin(), ids.end(), 0);
  const GraphBatch batch = make_batch(data.inputs, ids);
  for (auto _ : state) benchmark::DoNotOptimize(predict_log_probs(model, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GatForward)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_GatForwardBackward(benchmark::State& state) {
  const PreparedData& data = shared_data();
  const ModelConfig cfg = model_config_for(data, {16, 16}, Readout::kMean, 0.5);
  const GatModel model = init_params(0, cfg);
  std::vector<std::size_t> ids(static_cast<std::size_t>(state.range(0)));
  std::iota(ids.begin(), ids.end(), 0);
  const GraphBatch batch = make_batch(data.inputs, ids);
  std::vector<int> targets;
  for (std::size_t i : ids) targets.push_back(data.dataset.targets[i]);
  for (auto _ : state) {
    Tape tape;
    ForwardOptions opt;
    opt.training = true;
    opt.track_grad = true;
    ForwardPass pass = forward(tape, model, batch, opt);
    tape.backward(nll_loss(pass.log_probs, targets));
    benchmark::DoNotOptimize(pass.params.front().grad());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GatForwardBackward)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_LassoFit(benchmark::State& state) {
  const std::size_t n = 200, p = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0, 1);
  std::vector<double> grid(n * p);
  for (double& v : grid) v = normal(rng);
  standardize_columns(grid, n, p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = grid[i * p] - grid[i * p + 1] + 0.3 * normal(rng);
  LassoProblem problem{DesignMatrix::from_row_major(grid, n, p), y, 0.0};
  problem.lambda = 0.1 * lambda_max(problem);
  for (auto _ : state) benchmark::DoNotOptimize(lasso_fit(problem));
}
BENCHMARK(BM_LassoFit)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

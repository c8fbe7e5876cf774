#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mogat/error.hpp"
#include "mogat/gat.hpp"
#include "test_util.hpp"

using namespace mogat;

namespace {

GraphInputs path_graph_inputs(std::size_t samples, std::size_t channels, std::uint64_t seed) {
  PpiGraph g;
  g.node_ids = {"A", "B", "C"};
  g.edges = {{0, 1}, {1, 2}};
  g.scores = {0.9, 0.9};
  GraphInputs in;
  in.num_nodes = 3;
  in.channels = channels;
  in.edges = make_edge_index(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> grid(3 * channels);
    for (double& v : grid) v = n(rng);
    in.grids.push_back(grid);
  }
  return in;
}

double lrelu(double x, double slope) { return x > 0 ? x : slope * x; }

// Plain-loop evaluation-mode forward for one sample; shares no code with the
// tape implementation.
std::vector<double> reference_log_probs(const GatModel& m, const GraphInputs& in, std::size_t sample) {
  const std::size_t N = in.num_nodes;
  std::vector<std::vector<double>> h(N);
  for (std::size_t v = 0; v < N; ++v)
    h[v].assign(in.grids[sample].begin() + v * in.channels, in.grids[sample].begin() + (v + 1) * in.channels);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& W = m.layers[l].weight;
    const auto& a = m.layers[l].attention;
    const std::size_t fo = W.cols();
    std::vector<std::vector<double>> wh(N, std::vector<double>(fo, 0.0));
    for (std::size_t v = 0; v < N; ++v)
      for (std::size_t o = 0; o < fo; ++o)
        for (std::size_t i = 0; i < W.rows(); ++i) wh[v][o] += h[v][i] * W(i, o);
    std::vector<std::vector<double>> next(N, std::vector<double>(fo, 0.0));
    for (std::size_t v = 0; v < N; ++v) {
      std::vector<std::size_t> nbrs;
      for (std::size_t e = 0; e < in.edges.size(); ++e)
        if (in.edges.dst[e] == v) nbrs.push_back(in.edges.src[e]);
      std::vector<double> score;
      for (std::size_t u : nbrs) {
        double s = 0.0;
        for (std::size_t o = 0; o < fo; ++o) s += a[o] * wh[v][o] + a[fo + o] * wh[u][o];
        score.push_back(lrelu(s, m.config.attention_slope));
      }
      const double mx = *std::max_element(score.begin(), score.end());
      double z = 0.0;
      for (double& s : score) z += (s = std::exp(s - mx));
      for (std::size_t k = 0; k < nbrs.size(); ++k)
        for (std::size_t o = 0; o < fo; ++o) next[v][o] += score[k] / z * wh[nbrs[k]][o];
    }
    const auto& bn = m.norms[l];
    for (auto& row : next)
      for (std::size_t o = 0; o < fo; ++o) {
        const double normed = (row[o] - bn.running_mean[o]) / std::sqrt(bn.running_var[o] + m.config.bn_epsilon);
        row[o] = lrelu(bn.gamma[o] * normed + bn.beta[o], m.config.activation_slope);
      }
    h = next;
  }
  std::vector<double> pooled;
  if (m.config.readout == Readout::kMean) {
    pooled.assign(h[0].size(), 0.0);
    for (const auto& row : h)
      for (std::size_t o = 0; o < row.size(); ++o) pooled[o] += row[o] / static_cast<double>(N);
  } else {
    for (const auto& row : h) pooled.insert(pooled.end(), row.begin(), row.end());
  }
  const std::size_t K = m.config.num_classes;
  std::vector<double> logits(K);
  for (std::size_t k = 0; k < K; ++k) {
    logits[k] = m.head_bias[k];
    for (std::size_t i = 0; i < pooled.size(); ++i) logits[k] += pooled[i] * m.head_weight(i, k);
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  for (double& v : logits) v = v - mx - std::log(z);
  return logits;
}

ModelConfig small_config(std::size_t channels, Readout readout = Readout::kMean) {
  ModelConfig c;
  c.dims = {channels, 5, 4};
  c.num_classes = 3;
  c.num_nodes = 3;
  c.readout = readout;
  return c;
}

// Non-trivial running statistics so evaluation mode exercises them.
void perturb_norms(GatModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (auto& bn : m.norms)
    for (std::size_t c = 0; c < bn.gamma.size(); ++c) {
      bn.gamma[c] = u(rng);
      bn.beta[c] = u(rng) - 1.0;
      bn.running_mean[c] = u(rng) - 1.0;
      bn.running_var[c] = u(rng);
    }
}

}  // namespace

TEST(Gat, MatchesStraightLineReference) {
  for (Readout readout : {Readout::kMean, Readout::kFlatten}) {
    const GraphInputs in = path_graph_inputs(4, 2, 17);
    GatModel m = init_params(5, small_config(2, readout));
    perturb_norms(m, 6);
    const std::vector<std::size_t> samples{0, 1, 2, 3};
    const Tensor lp = predict_log_probs(m, make_batch(in, samples));
    for (std::size_t s = 0; s < 4; ++s) {
      const auto ref = reference_log_probs(m, in, s);
      for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(lp(s, k), ref[k], 1e-12);
    }
  }
}

TEST(Gat, SelfLoopOnlyNodeAttendsToItself) {
  Tape tape;
  Tensor h(2, 2, std::vector<double>{1, 2, 3, 4});
  const std::vector<std::size_t> src{0, 1}, dst{0, 1};
  LayerOutput out = gat_layer(tape.constant(h), tape.constant(Tensor(2, 2, 0.3)), tape.constant(Tensor(4, 1, 0.1)),
                              src, dst, 0.2);
  EXPECT_EQ(out.alpha.value()[0], 1.0);
  EXPECT_EQ(out.alpha.value()[1], 1.0);
}

TEST(Gat, IdenticalNeighboursShareAttention) {
  Tape tape;
  // node 0 receives from 1 and 2, which carry identical features
  Tensor h(3, 2, std::vector<double>{0.5, -1, 2, 3, 2, 3});
  const std::vector<std::size_t> src{1, 2, 1, 2}, dst{0, 0, 1, 2};
  LayerOutput out = gat_layer(tape.constant(h), tape.constant(Tensor(2, 3, 0.4)), tape.constant(Tensor(6, 1, 0.2)),
                              src, dst, 0.2);
  EXPECT_NEAR(out.alpha.value()[0], 0.5, 1e-15);
  EXPECT_NEAR(out.alpha.value()[1], 0.5, 1e-15);
}

TEST(Gat, NodeWithoutIncomingEdgeIsRejected) {
  Tape tape;
  const std::vector<std::size_t> src{0}, dst{0};
  EXPECT_THROW(gat_layer(tape.constant(Tensor(2, 2, 1.0)), tape.constant(Tensor(2, 2, 1.0)),
                         tape.constant(Tensor(4, 1, 1.0)), src, dst, 0.2),
               ShapeError);
}

TEST(BatchNorm, TrainingNormalizesColumns) {
  Tape tape;
  BatchNormParams p{Tensor(1, 2, 1.0), Tensor(1, 2, 0.0), Tensor(1, 2, 0.0), Tensor(1, 2, 1.0)};
  Tensor x(4, 2, std::vector<double>{1, 10, 2, 20, 3, 30, 4, 40});
  BatchStats stats;
  const Tensor y = batch_norm(tape.constant(x), tape.constant(p.gamma), tape.constant(p.beta), p, 1e-5, true, &stats)
                       .value();
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.5);
  EXPECT_DOUBLE_EQ(stats.var[0], 1.25);
  EXPECT_DOUBLE_EQ(stats.mean[1], 25.0);
  EXPECT_DOUBLE_EQ(stats.var[1], 125.0);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < 4; ++r) m += y(r, c) / 4;
    for (std::size_t r = 0; r < 4; ++r) v += (y(r, c) - m) * (y(r, c) - m) / 4;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
  update_running_stats(p, stats, 0.1);
  EXPECT_DOUBLE_EQ(p.running_mean[0], 0.25);
  EXPECT_DOUBLE_EQ(p.running_var[0], 0.9 + 0.125);
  update_running_stats(p, stats, 1.0);
  EXPECT_DOUBLE_EQ(p.running_mean[1], 25.0);
  EXPECT_DOUBLE_EQ(p.running_var[1], 125.0);
}

TEST(BatchNorm, EvaluationUsesRunningStatistics) {
  Tape tape;
  BatchNormParams p{Tensor(1, 1, 2.0), Tensor(1, 1, 0.5), Tensor(1, 1, 1.0), Tensor(1, 1, 4.0)};
  const Tensor y = batch_norm(tape.constant(Tensor(1, 1, 5.0)), tape.constant(p.gamma), tape.constant(p.beta), p,
                              1e-5, false)
                       .value();
  EXPECT_NEAR(y[0], 2.0 * 4.0 / std::sqrt(4.0 + 1e-5) + 0.5, 1e-12);
  EXPECT_THROW(batch_norm(tape.constant(Tensor(1, 1, 5.0)), tape.constant(p.gamma), tape.constant(p.beta), p, 1e-5,
                          true),
               ShapeError);
}

TEST(Gat, ZeroHeadGivesUniformOutput) {
  const GraphInputs in = path_graph_inputs(3, 2, 1);
  GatModel m = init_params(2, small_config(2));
  m.head_weight = Tensor(m.head_weight.rows(), m.head_weight.cols(), 0.0);
  const std::vector<std::size_t> samples{0, 1, 2};
  const Tensor lp = predict_log_probs(m, make_batch(in, samples));
  for (double v : lp.data()) EXPECT_NEAR(v, -std::log(3.0), 1e-15);
}

TEST(Gat, OutputsAreDistributions) {
  const GraphInputs in = path_graph_inputs(6, 2, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GatModel m = init_params(seed, small_config(2));
    std::vector<std::size_t> samples(6);
    std::iota(samples.begin(), samples.end(), 0);
    Tape tape;
    ForwardOptions opt;
    opt.training = true;
    opt.seed = seed;
    const Tensor lp = forward(tape, m, make_batch(in, samples), opt).log_probs.value();
    for (std::size_t r = 0; r < lp.rows(); ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < lp.cols(); ++k) s += std::exp(lp(r, k));
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Gat, EvaluationIsDeterministic) {
  const GraphInputs in = path_graph_inputs(4, 2, 9);
  const GatModel m = init_params(1, small_config(2));
  const std::vector<std::size_t> samples{3, 1};
  EXPECT_EQ(predict_log_probs(m, make_batch(in, samples)), predict_log_probs(m, make_batch(in, samples)));
}

TEST(Gat, InitializationBoundsAndSeeds) {
  ModelConfig c;
  c.dims = {4, 4};
  c.num_classes = 2;
  const GatModel m = init_params(3, c);
  const double bound = std::sqrt(6.0 / 8.0);
  EXPECT_NEAR(bound, 0.866, 1e-3);
  for (double v : m.layers[0].weight.data()) EXPECT_LE(std::abs(v), bound);
  EXPECT_EQ(m.norms[0].gamma, Tensor(1, 4, 1.0));
  EXPECT_EQ(m.norms[0].beta, Tensor(1, 4, 0.0));
  EXPECT_EQ(m.norms[0].running_var, Tensor(1, 4, 1.0));
  EXPECT_EQ(m.head_bias, Tensor(1, 2, 0.0));
  EXPECT_EQ(init_params(3, c).layers[0].weight, m.layers[0].weight);
  EXPECT_NE(init_params(4, c).layers[0].weight, m.layers[0].weight);
}

TEST(Gat, ConfigValidation) {
  ModelConfig c = small_config(2);
  c.dims = {2};
  EXPECT_THROW(init_params(0, c), ConfigError);
  c = small_config(2);
  c.num_classes = 1;
  EXPECT_THROW(init_params(0, c), ConfigError);
  c = small_config(2, Readout::kFlatten);
  c.num_nodes = 0;
  EXPECT_THROW(init_params(0, c), ConfigError);
  EXPECT_THROW(parse_readout("max"), ConfigError);
  EXPECT_EQ(parse_readout("flatten"), Readout::kFlatten);
}

TEST(Gat, InputShapeMismatchThrows) {
  const GraphInputs in = path_graph_inputs(2, 2, 9);
  const GatModel m = init_params(1, small_config(3));
  const std::vector<std::size_t> samples{0};
  EXPECT_THROW(predict_log_probs(m, make_batch(in, samples)), ShapeError);
}

TEST(Gat, MeanReadoutIsPermutationEquivariant) {
  // Relabel the nodes of a 5-node graph; the mean readout must not notice.
  PpiGraph g;
  g.node_ids = {"a", "b", "c", "d", "e"};
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {3, 4}};
  g.scores.assign(5, 1.0);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};  // old node v becomes perm[v]
  PpiGraph pg = g;
  for (auto& [a, b] : pg.edges) a = perm[a], b = perm[b];

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  GraphInputs in, pin;
  in.num_nodes = pin.num_nodes = 5;
  in.channels = pin.channels = 2;
  in.edges = make_edge_index(g);
  pin.edges = make_edge_index(pg);
  for (int s = 0; s < 3; ++s) {
    std::vector<double> grid(10), pgrid(10);
    for (double& v : grid) v = n(rng);
    for (std::size_t v = 0; v < 5; ++v)
      for (std::size_t c = 0; c < 2; ++c) pgrid[perm[v] * 2 + c] = grid[v * 2 + c];
    in.grids.push_back(grid);
    pin.grids.push_back(pgrid);
  }
  ModelConfig c = small_config(2);
  c.num_nodes = 5;
  GatModel m = init_params(8, c);
  perturb_norms(m, 2);
  const std::vector<std::size_t> samples{0, 1, 2};
  const Tensor a = predict_log_probs(m, make_batch(in, samples));
  const Tensor b = predict_log_probs(m, make_batch(pin, samples));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Gat, CheckpointRoundTripIsBitExact) {
  mogat::testing::TempDir dir;
  GatModel m = init_params(12, small_config(2, Readout::kFlatten));
  perturb_norms(m, 1);
  m.layers[0].weight[0] = 0.1 + 0.2;  // not exactly representable in short decimal
  save_checkpoint(m, dir / "model.json");
  const GatModel back = load_checkpoint(dir / "model.json");
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.config.dims, m.config.dims);
  EXPECT_EQ(back.config.readout, m.config.readout);
  const auto pa = m.parameters();
  const auto pb = back.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i], *pb[i]);
  for (std::size_t l = 0; l < m.norms.size(); ++l) {
    EXPECT_EQ(back.norms[l].running_mean, m.norms[l].running_mean);
    EXPECT_EQ(back.norms[l].running_var, m.norms[l].running_var);
  }
  EXPECT_EQ(checkpoint_json(back), checkpoint_json(m));
  EXPECT_THROW(checkpoint_from_json("{\"version\": 999}"), Error);
}

TEST(Gat, BatchStacksGraphs) {
  const GraphInputs in = path_graph_inputs(3, 2, 9);
  const std::vector<std::size_t> samples{2, 0};
  const GraphBatch b = make_batch(in, samples);
  EXPECT_EQ(b.features.rows(), 6u);
  EXPECT_EQ(b.src.size(), 2 * in.edges.size());
  EXPECT_EQ(b.dst[in.edges.size()], 3 + in.edges.dst[0]);
  EXPECT_EQ(b.features(0, 0), in.grids[2][0]);
  const std::vector<std::size_t> bad{7};
  EXPECT_THROW(make_batch(in, bad), ShapeError);
}

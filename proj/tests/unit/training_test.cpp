#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>

#include "mogat/error.hpp"
#include "mogat/ops.hpp"
#include "mogat/training.hpp"

using namespace mogat;

namespace {

// Four-node ring; class c moves one channel of node 0 up or down.
struct Toy {
  GraphInputs inputs;
  std::vector<int> targets;
};

Toy toy(std::size_t samples, std::size_t classes, std::uint64_t seed) {
  PpiGraph g;
  g.node_ids = {"a", "b", "c", "d"};
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  g.scores.assign(4, 1.0);
  Toy t;
  t.inputs.num_nodes = 4;
  t.inputs.channels = 2;
  t.inputs.edges = make_edge_index(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  for (std::size_t s = 0; s < samples; ++s) {
    const int c = static_cast<int>(s % classes);
    std::vector<double> grid(8);
    for (double& v : grid) v = n(rng);
    grid[(c / 2) % 2] += c % 2 ? -2.5 : 2.5;
    t.inputs.grids.push_back(grid);
    t.targets.push_back(c);
  }
  return t;
}

ModelConfig toy_model(std::size_t classes) {
  ModelConfig m;
  m.dims = {2, 6, 4};
  m.num_classes = classes;
  m.num_nodes = 4;
  m.dropout = 0.0;
  return m;
}

std::vector<std::size_t> all_samples(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST(Nll, Examples) {
  Tape tape;
  const double u = std::log(0.25);
  const std::vector<int> t0{0};
  EXPECT_NEAR(nll_loss(tape.constant(Tensor(1, 4, u)), t0).value().item(), std::log(4.0), 1e-15);
  const std::vector<int> t1{1};
  EXPECT_EQ(nll_loss(tape.constant(Tensor(1, 2, std::vector<double>{-1e300, 0.0})), t1).value().item(), 0.0);
  const std::vector<int> t2{0, 1};
  const Tensor lp(2, 2, std::vector<double>{std::log(0.5), std::log(0.5), std::log(0.2), std::log(0.8)});
  EXPECT_NEAR(nll_loss(tape.constant(lp), t2).value().item(), 0.5 * (std::log(2.0) - std::log(0.8)), 1e-15);
  const std::vector<int> bad{3};
  EXPECT_THROW(nll_loss(tape.constant(Tensor(1, 2, u)), bad), ConfigError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor p(2, 2, 1.5);
  std::vector<Tensor*> params{&p};
  const std::vector<Tensor> grads{Tensor(2, 2, 0.0)};
  AdamState state;
  adam_step(params, grads, state, {}, 1);
  EXPECT_EQ(p, Tensor(2, 2, 1.5));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor p(1, 1, 0.0);
  std::vector<Tensor*> params{&p};
  const std::vector<Tensor> grads{Tensor(1, 1, 1.0)};
  AdamState state;
  AdamHyper h;
  h.learning_rate = 0.1;
  adam_step(params, grads, state, h, 1);
  EXPECT_NEAR(p[0], -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_THROW(adam_step(params, grads, state, h, 0), ConfigError);
}

TEST(Adam, MatchesClosedFormOverSteps) {
  Tensor p(1, 1, 0.0), q(1, 1, 0.0);
  std::vector<Tensor*> params{&p, &q};
  AdamState state;
  AdamHyper h;
  double m = 0, v = 0, theta = 0;
  for (std::size_t t = 1; t <= 5; ++t) {
    const double g = 0.3 * static_cast<double>(t) - 1.0;
    const std::vector<Tensor> grads{Tensor(1, 1, g), Tensor(1, 1, g)};
    adam_step(params, grads, state, h, t);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    theta -= 1e-3 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p[0], theta, 1e-15);
    EXPECT_EQ(p[0], q[0]);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.folds = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

TEST(Folds, BalancedCountsExample) {
  std::vector<int> targets(100);
  for (std::size_t i = 0; i < 100; ++i) targets[i] = static_cast<int>(i % 4);
  const auto folds = stratified_folds(targets, 4, 5, 7);
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 20u);
    std::vector<int> per(4, 0);
    for (std::size_t i : f) ++per[targets[i]];
    for (int c : per) EXPECT_EQ(c, 5);
  }
}

TEST(Folds, PartitionTheSamples) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t K = 2 + rng() % 5, k = 2 + rng() % 4, n = K * k + rng() % 80;
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = static_cast<int>(i < K * k ? i % K : rng() % K);
    const auto folds = stratified_folds(targets, K, k, trial);
    std::vector<int> seen(n, 0);
    for (const auto& f : folds)
      for (std::size_t i : f) ++seen[i];
    for (int s : seen) ASSERT_EQ(s, 1);
    // per-class fold counts differ by at most one
    for (std::size_t c = 0; c < K; ++c) {
      std::size_t lo = n, hi = 0;
      for (const auto& f : folds) {
        const auto cnt = static_cast<std::size_t>(
            std::count_if(f.begin(), f.end(), [&](std::size_t i) { return targets[i] == static_cast<int>(c); }));
        lo = std::min(lo, cnt);
        hi = std::max(hi, cnt);
      }
      ASSERT_LE(hi - lo, 1u);
    }
  }
}

TEST(Folds, SmallClassIsNamed) {
  const std::vector<int> targets{0, 0, 0, 0, 0, 1, 1, 1, 1};
  try {
    stratified_folds(targets, 2, 5, 0, {"Normal", "T01"});
    FAIL() << "expected CvInfeasibleError";
  } catch (const CvInfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("T01"), std::string::npos);
  }
}

TEST(CrossValidate, PerfectStub) {
  std::vector<int> targets(60);
  for (std::size_t i = 0; i < 60; ++i) targets[i] = static_cast<int>(i % 3);
  TrainConfig c;
  const FoldRunner oracle = [&](std::span<const std::size_t> train, std::span<const std::size_t> test, std::size_t) {
    for (std::size_t i : test) EXPECT_FALSE(std::binary_search(train.begin(), train.end(), i));
    EXPECT_EQ(train.size() + test.size(), 60u);
    FoldOutcome out;
    for (std::size_t i : test) out.predictions.push_back(targets[i]);
    return out;
  };
  const CvReport r = cross_validate(targets, 3, c, oracle);
  ASSERT_EQ(r.folds.size(), 5u);
  for (const auto& f : r.folds) EXPECT_EQ(f.accuracy, 1.0);
  EXPECT_EQ(r.mean.accuracy, 1.0);
  EXPECT_EQ(r.std.accuracy, 0.0);
  EXPECT_EQ(r.mean.f1_macro, 1.0);
  EXPECT_EQ(r.summary_line(), "accuracy 100.00% ± 0.0000");
}

TEST(CrossValidate, MeanAndSampleSd) {
  std::vector<int> targets(50);
  for (std::size_t i = 0; i < 50; ++i) targets[i] = static_cast<int>(i % 2);
  TrainConfig c;
  // fold f predicts everything as class 0, except fold 0 which is perfect
  const FoldRunner runner = [&](std::span<const std::size_t>, std::span<const std::size_t> test, std::size_t f) {
    FoldOutcome out;
    for (std::size_t i : test) out.predictions.push_back(f == 0 ? targets[i] : 0);
    return out;
  };
  const CvReport r = cross_validate(targets, 2, c, runner);
  std::vector<double> acc;
  for (const auto& f : r.folds) acc.push_back(f.accuracy);
  double m = 0.0;
  for (double a : acc) m += a / 5.0;
  double ss = 0.0;
  for (double a : acc) ss += (a - m) * (a - m);
  EXPECT_NEAR(r.mean.accuracy, m, 1e-12);
  EXPECT_NEAR(r.std.accuracy, std::sqrt(ss / 4.0), 1e-12);
  EXPECT_EQ(sample_sd(std::vector<double>{1.0}), 0.0);

  const auto doc = nlohmann::json::parse(r.to_json());
  for (const char* key : {"config", "folds", "mean", "std", "seed"}) EXPECT_TRUE(doc.contains(key)) << key;
  for (const char* key : {"accuracy", "precision_macro", "recall_macro", "f1_macro", "loss_history_len"})
    EXPECT_TRUE(doc["folds"][0].contains(key)) << key;
}

TEST(CrossValidate, ParallelMatchesSequential) {
  std::vector<int> targets(40);
  for (std::size_t i = 0; i < 40; ++i) targets[i] = static_cast<int>(i % 2);
  TrainConfig c;
  const FoldRunner runner = [&](std::span<const std::size_t>, std::span<const std::size_t> test, std::size_t f) {
    FoldOutcome out;
    for (std::size_t i : test) out.predictions.push_back(static_cast<int>((i + f) % 2));
    return out;
  };
  EXPECT_EQ(cross_validate(targets, 2, c, runner, false).to_json(),
            cross_validate(targets, 2, c, runner, true).to_json());
}

TEST(TrainFold, FirstEpochDoesNotIncreaseLoss) {
  const Toy t = toy(40, 2, 1);
  const auto samples = all_samples(40);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig c;  // default learning rate, full batch
    c.epochs = 1;
    const TrainResult r = train_fold(t.inputs, t.targets, samples, toy_model(2), c, seed);
    const double after = training_split_loss(r.model, t.inputs, t.targets, samples);
    EXPECT_LE(after, r.initial_loss) << "seed " << seed;
  }
}

TEST(TrainFold, LearnsSeparableData) {
  const Toy t = toy(80, 4, 2);
  const auto samples = all_samples(80);
  TrainConfig c;
  c.epochs = 60;
  c.learning_rate = 0.02;
  c.batch_size = 16;
  const TrainResult r = train_fold(t.inputs, t.targets, samples, toy_model(4), c, 3);
  EXPECT_EQ(r.loss_history.size(), 60u);
  EXPECT_LT(r.loss_history.back(), r.initial_loss);
  const auto pred = predict(r.model, t.inputs, samples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 80; ++i) correct += pred[i] == t.targets[i];
  EXPECT_GE(correct, 72u);
}

TEST(TrainFold, Deterministic) {
  const Toy t = toy(30, 3, 4);
  const auto samples = all_samples(30);
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 8;
  ModelConfig m = toy_model(3);
  m.dropout = 0.3;
  const TrainResult a = train_fold(t.inputs, t.targets, samples, m, c, 9);
  const TrainResult b = train_fold(t.inputs, t.targets, samples, m, c, 9);
  const auto pa = a.model.parameters();
  const auto pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i], *pb[i]);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(TrainFold, Errors) {
  const Toy t = toy(20, 2, 5);
  const std::vector<std::size_t> one_class{0, 2, 4, 6};
  TrainConfig c;
  c.epochs = 1;
  EXPECT_THROW(train_fold(t.inputs, t.targets, one_class, toy_model(2), c, 0), ConfigError);
  c.epochs = 0;
  EXPECT_THROW(train_fold(t.inputs, t.targets, all_samples(20), toy_model(2), c, 0), ConfigError);
}

TEST(TrainFold, PatienceStopsEarly) {
  const Toy t = toy(20, 2, 6);
  TrainConfig c;
  c.epochs = 200;
  c.learning_rate = 1e-9;
  c.patience = 2;
  ModelConfig m = toy_model(2);
  m.dropout = 0.5;
  const TrainResult r = train_fold(t.inputs, t.targets, all_samples(20), m, c, 1);
  EXPECT_LT(r.loss_history.size(), 200u);
}

TEST(CrossValidateGat, FoldSeedsAndPredictions) {
  const Toy t = toy(40, 2, 8);
  LabelEncoding enc;
  enc.classes = {"A", "B"};
  enc.index = {{"A", 0}, {"B", 1}};
  TrainConfig c;
  c.epochs = 3;
  c.folds = 4;
  c.seed = 11;
  const CvRun run = cross_validate_gat(t.inputs, t.targets, enc, toy_model(2), c);
  ASSERT_EQ(run.models.size(), 4u);
  for (std::size_t f = 0; f < 4; ++f) EXPECT_EQ(run.models[f].seed, 11 + f);
  for (int p : run.predictions) EXPECT_TRUE(p == 0 || p == 1);
  EXPECT_EQ(run.report.folds[0].loss_history_len, 3u);
  EXPECT_TRUE(run.report.model.has_value());
}

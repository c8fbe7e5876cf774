#include "mogat/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "mogat/error.hpp"
#include "mogat/metrics.hpp"
#include "mogat/ops.hpp"

namespace mogat {

namespace {

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step) {
  std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (step + 0x632be59bd9b4e019ULL));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> gather(std::span<const int> targets, std::span<const std::size_t> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (std::size_t s : samples) out.push_back(targets[s]);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train config: learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("train config: Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("train config: Adam epsilon must be > 0");
  if (folds < 2) throw ConfigError("train config: fold count must be >= 2");
}

Var nll_loss(Var log_probs, std::span<const int> targets) {
  const Tensor& lp = log_probs.value();
  if (targets.size() != lp.rows()) throw ShapeError("nll_loss: one target per row required");
  std::vector<std::size_t> index(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= lp.cols())
      throw ConfigError("nll_loss: target out of range at row " + std::to_string(i));
    index[i] = static_cast<std::size_t>(targets[i]);
  }
  return ops::mul_scalar(ops::mean(ops::pick(log_probs, index)), -1.0);
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamHyper& hyper, std::size_t t) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  if (t < 1) throw ConfigError("adam_step: step index starts at 1");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->rows(), p->cols(), 0.0);
      state.v.emplace_back(p->rows(), p->cols(), 0.0);
    }
  }
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    if (!p.same_shape(g) || !p.same_shape(state.m[k])) throw ShapeError("adam_step: shape mismatch");
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  }
}

double training_split_loss(const GatModel& model, const GraphInputs& inputs, std::span<const int> targets,
                           std::span<const std::size_t> samples) {
  GatModel probe = model;
  probe.config.dropout = 0.0;
  const GraphBatch batch = make_batch(inputs, samples);
  Tape tape;
  ForwardOptions options;
  options.training = true;
  ForwardPass pass = forward(tape, probe, batch, options);
  const std::vector<int> t = gather(targets, samples);
  return nll_loss(pass.log_probs, t).value().item();
}

TrainResult train_fold(const GraphInputs& inputs, std::span<const int> targets,
                       std::span<const std::size_t> train_samples, const ModelConfig& model_config,
                       const TrainConfig& config, std::uint64_t model_seed) {
  config.validate();
  if (train_samples.empty()) throw ConfigError("train_fold: empty training split");
  std::set<int> present;
  for (std::size_t s : train_samples) present.insert(targets[s]);
  if (present.size() < 2) throw ConfigError("train_fold: training split contains a single class");

  TrainResult result{init_params(model_seed, model_config), 0.0, {}};
  GatModel& model = result.model;
  result.initial_loss = training_split_loss(model, inputs, targets, train_samples);

  const AdamHyper hyper{config.learning_rate, config.beta1, config.beta2, config.adam_epsilon};
  AdamState state;
  std::mt19937_64 rng(model_seed);
  std::vector<std::size_t> order(train_samples.begin(), train_samples.end());
  const std::size_t batch_size = config.batch_size == 0 ? order.size() : std::min(config.batch_size, order.size());
  std::size_t step = 0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch_size < order.size()) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0, end = 0; start < order.size(); start = end) {
      end = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> ids(order.data() + start, end - start);
      const GraphBatch batch = make_batch(inputs, ids);
      const std::vector<int> t = gather(targets, ids);

      Tape tape;
      ForwardOptions options;
      options.training = true;
      options.track_grad = true;
      options.seed = step_seed(model_seed, step);
      ForwardPass pass = forward(tape, model, batch, options);
      Var loss = nll_loss(pass.log_probs, t);
      tape.backward(loss);

      std::vector<Tensor> grads;
      grads.reserve(pass.params.size());
      for (const Var& p : pass.params) grads.push_back(p.grad());
      auto params = model.parameters();
      adam_step(params, grads, state, hyper, ++step);
      for (std::size_t l = 0; l < model.norms.size(); ++l)
        update_running_stats(model.norms[l], pass.stats[l], model.config.bn_momentum);

      loss_sum += loss.value().item();
      ++batches;
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    result.loss_history.push_back(epoch_loss);
    if (config.patience > 0) {
      if (epoch_loss < best) {
        best = epoch_loss;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  return result;
}

std::vector<int> predict(const GatModel& model, const GraphInputs& inputs, std::span<const std::size_t> samples,
                         std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    const GraphBatch batch = make_batch(inputs, samples.subspan(start, end - start));
    const Tensor lp = predict_log_probs(model, batch);
    for (std::size_t r = 0; r < lp.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < lp.cols(); ++c)
        if (lp(r, c) > lp(r, best)) best = c;
      out.push_back(static_cast<int>(best));
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> targets, std::size_t num_classes,
                                                       std::size_t k, std::uint64_t seed,
                                                       const std::vector<std::string>& class_names) {
  if (k < 2) throw ConfigError("stratified_folds: k must be >= 2");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= num_classes)
      throw ConfigError("stratified_folds: target out of range");
    by_class[static_cast<std::size_t>(targets[i])].push_back(i);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!by_class[c].empty() && by_class[c].size() < k) {
      const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
      throw CvInfeasibleError("class '" + name + "' has " + std::to_string(by_class[c].size()) +
                              " samples, fewer than the " + std::to_string(k) + " folds");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t deal = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) folds[deal++ % k].push_back(idx);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

double mean_of(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

CvReport cross_validate(std::span<const int> targets, std::size_t num_classes, const TrainConfig& config,
                        const FoldRunner& runner, bool parallel_folds, const std::vector<std::string>& class_names) {
  config.validate();
  const auto folds = stratified_folds(targets, num_classes, config.folds, config.seed, class_names);

  auto run_fold = [&](std::size_t f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());
    return runner(train, folds[f], f);
  };

  std::vector<FoldOutcome> outcomes(folds.size());
  if (parallel_folds) {
    std::vector<std::future<FoldOutcome>> futures;
    for (std::size_t f = 0; f < folds.size(); ++f) futures.push_back(std::async(std::launch::async, run_fold, f));
    for (std::size_t f = 0; f < folds.size(); ++f) outcomes[f] = futures[f].get();
  } else {
    for (std::size_t f = 0; f < folds.size(); ++f) outcomes[f] = run_fold(f);
  }

  CvReport report;
  report.config = config;
  report.seed = config.seed;
  std::vector<double> acc, prec, rec, f1;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (outcomes[f].predictions.size() != folds[f].size())
      throw ShapeError("cross_validate: fold runner returned the wrong number of predictions");
    const std::vector<int> truth = gather(targets, folds[f]);
    const ConfusionMatrix cm = confusion(truth, outcomes[f].predictions, num_classes);
    const MacroScores macro = macro_prf(cm);
    FoldMetrics m{accuracy(cm) / 100.0, macro.precision, macro.recall, macro.f1, outcomes[f].loss_history_len};
    report.folds.push_back(m);
    acc.push_back(m.accuracy);
    prec.push_back(m.precision_macro);
    rec.push_back(m.recall_macro);
    f1.push_back(m.f1_macro);
  }
  report.mean = {mean_of(acc), mean_of(prec), mean_of(rec), mean_of(f1), 0};
  report.std = {sample_sd(acc), sample_sd(prec), sample_sd(rec), sample_sd(f1), 0};
  return report;
}

CvRun cross_validate_gat(const GraphInputs& inputs, std::span<const int> targets, const LabelEncoding& encoding,
                         const ModelConfig& model_config, const TrainConfig& config, bool parallel_folds) {
  CvRun run;
  std::vector<std::optional<GatModel>> models(config.folds);
  run.predictions.assign(targets.size(), -1);
  run.initial_losses.resize(config.folds);
  run.loss_histories.resize(config.folds);
  FoldRunner runner = [&](std::span<const std::size_t> train, std::span<const std::size_t> test, std::size_t fold) {
    TrainResult trained = train_fold(inputs, targets, train, model_config, config, config.seed + fold);
    FoldOutcome outcome{predict(trained.model, inputs, test), trained.loss_history.size()};
    for (std::size_t i = 0; i < test.size(); ++i) run.predictions[test[i]] = outcome.predictions[i];
    run.initial_losses[fold] = trained.initial_loss;
    run.loss_histories[fold] = std::move(trained.loss_history);
    models[fold] = std::move(trained.model);
    return outcome;
  };
  run.report = cross_validate(targets, encoding.num_classes(), config, runner, parallel_folds, encoding.classes);
  run.report.model = model_config;
  for (auto& m : models) run.models.push_back(std::move(*m));
  return run;
}

std::string CvReport::to_json() const {
  using nlohmann::json;
  auto metrics = [](const FoldMetrics& m) {
    return json{{"accuracy", m.accuracy},
                {"precision_macro", m.precision_macro},
                {"recall_macro", m.recall_macro},
                {"f1_macro", m.f1_macro}};
  };
  json cfg = {{"epochs", config.epochs},
              {"learning_rate", config.learning_rate},
              {"beta1", config.beta1},
              {"beta2", config.beta2},
              {"adam_epsilon", config.adam_epsilon},
              {"batch_size", config.batch_size},
              {"seed", config.seed},
              {"folds", config.folds},
              {"patience", config.patience}};
  if (model) {
    cfg["model"] = {{"dims", model->dims},
                    {"num_classes", model->num_classes},
                    {"num_nodes", model->num_nodes},
                    {"readout", to_string(model->readout)},
                    {"dropout", model->dropout},
                    {"attention_slope", model->attention_slope},
                    {"activation_slope", model->activation_slope},
                    {"bn_momentum", model->bn_momentum},
                    {"bn_epsilon", model->bn_epsilon}};
  }
  json fold_list = json::array();
  for (const auto& f : folds) {
    json j = metrics(f);
    j["loss_history_len"] = f.loss_history_len;
    fold_list.push_back(std::move(j));
  }
  json doc = {{"config", cfg}, {"folds", fold_list}, {"mean", metrics(mean)}, {"std", metrics(std)}, {"seed", seed}};
  return doc.dump(2);
}

std::string CvReport::summary_line() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "accuracy %.2f%% ± %.4f", 100.0 * mean.accuracy, std.accuracy);
  return buf;
}

}  // namespace mogat

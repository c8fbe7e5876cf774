#include "mogat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mogat/error.hpp"
#include "mogat/lasso.hpp"

namespace mogat {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace

// ---- select ---------------------------------------------------------------

SelectMode parse_select_mode(const std::string& text) {
  if (text == "mrna") return SelectMode::kMrna;
  if (text == "methylation") return SelectMode::kMethylation;
  throw ConfigError("unknown selection mode '" + text + "' (expected mrna or methylation)");
}

std::string to_string(SelectMode mode) { return mode == SelectMode::kMrna ? "mrna" : "methylation"; }

double default_p_threshold(SelectMode mode) { return mode == SelectMode::kMrna ? 0.001 : 0.05; }

SelectResult run_select(const OmicsMatrix& input, const SampleLabels& labels, const SelectOptions& options) {
  input.validate();
  SelectResult result;
  result.mode = options.mode;
  result.layer_name = input.layer_name;
  result.p_threshold = options.p_threshold.value_or(default_p_threshold(options.mode));
  if (!(result.p_threshold > 0.0 && result.p_threshold < 1.0))
    throw ConfigError("p-value threshold must lie in (0, 1)");
  if (options.lambda && !(*options.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");

  // Labelled samples only.
  std::vector<std::size_t> columns;
  for (std::size_t s = 0; s < input.num_samples(); ++s)
    if (labels.count(input.sample_ids[s])) columns.push_back(s);
  if (columns.empty()) throw ConfigError("select: no sample of the matrix has a label");
  OmicsMatrix matrix;
  matrix.layer_name = input.layer_name;
  matrix.feature_ids = input.feature_ids;
  for (std::size_t s : columns) matrix.sample_ids.push_back(input.sample_ids[s]);
  matrix.values.reserve(matrix.num_features() * columns.size());
  for (std::size_t f = 0; f < input.num_features(); ++f)
    for (std::size_t s : columns) matrix.values.push_back(input.at(f, s));
  if (options.mode == SelectMode::kMrna) matrix = log2_counts(std::move(matrix));

  result.samples = matrix.num_samples();
  result.input_features = matrix.num_features();

  const auto groups = tumor_normal_groups(matrix, labels, options.normal_label);
  const PerFeatureStats stats = group_stats(matrix, groups);
  result.prior = estimate_prior(stats);
  const ModeratedTests tests = moderated_t(stats, result.prior);
  const std::vector<std::size_t> kept = filter_by_p(tests.p, result.p_threshold);
  result.after_de = kept.size();
  for (std::size_t f : kept) result.de_ids.push_back(matrix.feature_ids[f]);
  if (kept.empty()) throw EmptySelectionError("no features selected (none passed the differential-expression filter)");

  const std::size_t n = matrix.num_samples(), p = kept.size();
  std::vector<double> grid(n * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t s = 0; s < n; ++s) grid[s * p + j] = matrix.at(kept[j], s);
  standardize_columns(grid, n, p);
  const DesignMatrix x = DesignMatrix::from_row_major(grid, n, p);
  const auto [encoding, targets] = encode_labels(labels, matrix.sample_ids);

  result.lambda_max = lambda_max_ovr(x, targets, encoding.num_classes());
  result.lambda = options.lambda.value_or(0.1 * result.lambda_max);
  const std::vector<std::size_t> chosen = select_features_ovr(x, targets, encoding.num_classes(), result.lambda);
  result.selected = chosen.size();
  for (std::size_t j : chosen) result.selected_ids.push_back(result.de_ids[j]);
  if (chosen.empty()) throw EmptySelectionError("no features selected (LASSO removed every feature)");
  return result;
}

std::string SelectResult::report_json() const {
  json doc = {{"layer", layer_name},
              {"mode", to_string(mode)},
              {"samples", samples},
              {"stages",
               json::array({json{{"stage", "input"}, {"features", input_features}},
                            json{{"stage", "differential_expression"}, {"features", after_de}},
                            json{{"stage", "lasso"}, {"features", selected}}})},
              {"p_threshold", p_threshold},
              {"prior", {{"d0", std::isinf(prior.d0) ? json("inf") : json(prior.d0)}, {"s0_sq", prior.s0_sq}}},
              {"lambda", lambda},
              {"lambda_max", lambda_max}};
  return doc.dump(2);
}

void write_select_outputs(const SelectResult& result, const std::filesystem::path& dir) {
  ensure_dir(dir);
  auto list = open_out(dir / "selected_features.txt");
  for (const auto& id : result.selected_ids) list << id << '\n';
  open_out(dir / "select_report.json") << result.report_json() << '\n';
}

std::vector<std::string> load_feature_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open feature list " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

// ---- train ----------------------------------------------------------------

OmicsMatrix restrict_features(const OmicsMatrix& matrix, const std::vector<std::string>& keep) {
  const std::set<std::string> wanted(keep.begin(), keep.end());
  OmicsMatrix out;
  out.layer_name = matrix.layer_name;
  out.sample_ids = matrix.sample_ids;
  std::size_t found = 0;
  for (std::size_t f = 0; f < matrix.num_features(); ++f) {
    if (!wanted.count(matrix.feature_ids[f])) continue;
    ++found;
    out.feature_ids.push_back(matrix.feature_ids[f]);
    const auto row = matrix.values.begin() + static_cast<std::ptrdiff_t>(f * matrix.num_samples());
    out.values.insert(out.values.end(), row, row + static_cast<std::ptrdiff_t>(matrix.num_samples()));
  }
  if (found != wanted.size())
    throw ConfigError("feature list names " + std::to_string(wanted.size() - found) + " feature(s) absent from layer " +
                      matrix.layer_name);
  return out;
}

PreparedData prepare_graph_data(const std::vector<OmicsMatrix>& layers, const SampleLabels& labels, PpiGraph graph,
                                const FeatureGeneMap& feature_map) {
  PreparedData data;
  data.dataset = integrate(layers, labels);
  standardize_columns(data.dataset);
  data.graph = std::move(graph);
  data.spec = map_features_to_nodes(data.graph, feature_map, data.dataset.features, layers.size());
  data.inputs = build_sample_graph_inputs(data.dataset, data.spec, data.graph);
  return data;
}

TrainPlan plan_for_dataset_dir(const std::filesystem::path& dir, const std::vector<std::string>& layer_names) {
  static const std::array<std::pair<const char*, const char*>, 3> kFiles{
      {{"mRNA", "mrna.csv"}, {"miRNA", "mirna.csv"}, {"methylation", "methylation.csv"}}};
  TrainPlan plan;
  for (const auto& [name, file] : kFiles) {
    if (!layer_names.empty() && std::find(layer_names.begin(), layer_names.end(), name) == layer_names.end()) continue;
    plan.layers.push_back({name, dir / file, std::string(name) == "mRNA", std::nullopt});
  }
  for (const auto& wanted : layer_names)
    if (std::none_of(kFiles.begin(), kFiles.end(), [&](const auto& f) { return wanted == f.first; }))
      throw ConfigError("unknown layer '" + wanted + "' (expected mRNA, miRNA or methylation)");
  plan.labels = dir / "labels.csv";
  plan.edges = dir / "edges.tsv";
  plan.feature_map = dir / "feature_map.tsv";
  if (std::filesystem::exists(dir / "nodes.txt")) plan.nodes = dir / "nodes.txt";
  return plan;
}

ModelConfig model_config_for(const PreparedData& data, const std::vector<std::size_t>& hidden, Readout readout,
                             double dropout) {
  ModelConfig model;
  model.dims = {data.inputs.channels};
  model.dims.insert(model.dims.end(), hidden.begin(), hidden.end());
  model.num_classes = data.dataset.encoding.num_classes();
  model.num_nodes = data.inputs.num_nodes;
  model.readout = readout;
  model.dropout = dropout;
  model.validate();
  return model;
}

TrainOutcome train_prepared(PreparedData data, const ModelConfig& model, const TrainConfig& train,
                            bool parallel_folds) {
  TrainOutcome outcome;
  outcome.data = std::move(data);
  outcome.run = cross_validate_gat(outcome.data.inputs, outcome.data.dataset.targets, outcome.data.dataset.encoding,
                                   model, train, parallel_folds);
  return outcome;
}

TrainOutcome run_train(const TrainPlan& plan) {
  if (plan.layers.empty()) throw ConfigError("train: no omics layers given");
  std::vector<OmicsMatrix> layers;
  for (const auto& source : plan.layers) {
    OmicsMatrix m = load_matrix(source.path, source.name);
    if (source.log2) m = log2_counts(std::move(m));
    if (source.features) m = restrict_features(m, load_feature_list(*source.features));
    layers.push_back(std::move(m));
  }
  const SampleLabels labels = load_labels(plan.labels);
  PpiGraph graph = parse_edge_list(plan.edges, plan.score_threshold, plan.nodes);
  const FeatureGeneMap feature_map = load_feature_map(plan.feature_map);
  PreparedData data = prepare_graph_data(layers, labels, std::move(graph), feature_map);
  const ModelConfig model = model_config_for(data, plan.hidden, plan.readout, plan.dropout);
  return train_prepared(std::move(data), model, plan.train, plan.parallel_folds);
}

void write_train_outputs(const TrainOutcome& outcome, const std::filesystem::path& dir) {
  ensure_dir(dir);
  open_out(dir / "cv_report.json") << outcome.run.report.to_json() << '\n';
  SampleLabels predicted;
  const auto& ds = outcome.data.dataset;
  for (std::size_t i = 0; i < ds.num_samples(); ++i)
    predicted[ds.sample_ids[i]] = ds.encoding.classes[static_cast<std::size_t>(outcome.run.predictions[i])];
  write_labels(predicted, dir / "predictions.csv");
  for (std::size_t f = 0; f < outcome.run.models.size(); ++f)
    save_checkpoint(outcome.run.models[f], dir / ("fold_" + std::to_string(f) + ".json"));
}

// ---- gradcheck ------------------------------------------------------------

GradcheckOutcome run_gradcheck(std::uint64_t seed, const GradcheckSpec& spec) {
  constexpr std::size_t kNodes = 6, kSamples = 3, kChannels = 4, kClasses = 3;
  ModelConfig config;
  config.dims = {kChannels, 10, 8};
  config.num_classes = kClasses;
  config.num_nodes = kNodes;
  config.dropout = 0.0;
  GatModel model = init_params(seed, config);

  // Ring plus two chords.
  PpiGraph graph;
  for (std::size_t v = 0; v < kNodes; ++v) graph.node_ids.push_back("N" + std::to_string(v));
  for (std::size_t v = 0; v < kNodes; ++v) {
    graph.edges.emplace_back(std::min(v, (v + 1) % kNodes), std::max(v, (v + 1) % kNodes));
    graph.scores.push_back(1.0);
  }
  graph.edges.emplace_back(0, 3);
  graph.edges.emplace_back(1, 4);
  graph.scores.insert(graph.scores.end(), {1.0, 1.0});

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  GraphInputs inputs;
  inputs.num_nodes = kNodes;
  inputs.channels = kChannels;
  inputs.edges = make_edge_index(graph);
  for (std::size_t s = 0; s < kSamples; ++s) {
    std::vector<double> grid(kNodes * kChannels);
    for (double& v : grid) v = normal(rng);
    inputs.grids.push_back(std::move(grid));
  }
  const std::vector<std::size_t> samples{0, 1, 2};
  const GraphBatch batch = make_batch(inputs, samples);
  const std::vector<int> targets{0, 2, 1};

  GradcheckOutcome outcome;
  outcome.param_names = model.parameter_names();
  std::vector<Tensor> params;
  for (const Tensor* p : model.parameters()) {
    params.push_back(*p);
    outcome.total_entries += p->size();
  }
  const LossFunction loss = [&](Tape& tape, std::span<const Var> vars) {
    ForwardOptions options;
    options.training = true;
    const ForwardPass pass = forward(tape, model, batch, options, vars);
    return nll_loss(pass.log_probs, targets);
  };
  GradCheckOptions options;
  options.step = spec.step;
  options.tolerance = spec.tolerance;
  options.max_entries = spec.max_entries;
  options.seed = seed;
  outcome.report = grad_check(loss, params, options);
  return outcome;
}

std::string GradcheckOutcome::worst_location() const {
  return param_names.at(report.worst_param) + "[" + std::to_string(report.worst_entry) + "]";
}

std::string GradcheckOutcome::report_json() const {
  json doc = {{"passed", report.passed},
              {"max_relative_error", report.max_error},
              {"worst_parameter", worst_location()},
              {"worst_analytic", report.worst_analytic},
              {"worst_numeric", report.worst_numeric},
              {"entries_checked", report.entries_checked},
              {"total_entries", total_entries}};
  return doc.dump(2);
}

// ---- eval -----------------------------------------------------------------

EvalResult evaluate_predictions(const SampleLabels& predictions, const SampleLabels& truth) {
  if (predictions.empty()) throw FormatError("eval: no samples");
  EvalResult result;
  std::set<std::string> classes;
  for (const auto& [id, label] : predictions) {
    const auto it = truth.find(id);
    if (it == truth.end()) throw FormatError("eval: sample " + id + " has no true label");
    classes.insert(label);
    classes.insert(it->second);
  }
  result.classes.assign(classes.begin(), classes.end());
  std::unordered_map<std::string, int> index;
  for (std::size_t k = 0; k < result.classes.size(); ++k) index[result.classes[k]] = static_cast<int>(k);
  std::vector<int> y_true, y_pred;
  for (const auto& [id, label] : predictions) {
    y_pred.push_back(index.at(label));
    y_true.push_back(index.at(truth.at(id)));
  }
  result.confusion = confusion(y_true, y_pred, result.classes.size());
  result.accuracy = accuracy(result.confusion);
  result.macro = macro_prf(result.confusion);
  return result;
}

std::string EvalResult::report_json() const {
  json rows = json::array();
  for (std::size_t t = 0; t < classes.size(); ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < classes.size(); ++p) row.push_back(confusion.at(t, p));
    rows.push_back(std::move(row));
  }
  json doc = {{"samples", confusion.total()},
              {"classes", classes},
              {"confusion", rows},
              {"accuracy", accuracy},
              {"precision_macro", macro.precision},
              {"recall_macro", macro.recall},
              {"f1_macro", macro.f1}};
  return doc.dump(2);
}

// ---- configuration --------------------------------------------------------

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const json& value) {
  std::filesystem::path p = value.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

TrainPlan parse_train(const json& t, const std::filesystem::path& base) {
  TrainPlan plan;
  if (t.contains("data_dir")) {
    plan = plan_for_dataset_dir(resolve(base, t.at("data_dir")),
                                t.value("layer_names", std::vector<std::string>{}));
  }
  if (t.contains("layers")) {
    plan.layers.clear();
    for (const auto& l : t.at("layers")) {
      LayerSource source;
      source.name = l.at("name").get<std::string>();
      source.path = resolve(base, l.at("path"));
      const std::string transform = l.value("transform", "none");
      if (transform != "none" && transform != "log2") throw ConfigError("unknown transform '" + transform + "'");
      source.log2 = transform == "log2";
      if (l.contains("features")) source.features = resolve(base, l.at("features"));
      plan.layers.push_back(std::move(source));
    }
  }
  if (t.contains("labels")) plan.labels = resolve(base, t.at("labels"));
  if (t.contains("edges")) plan.edges = resolve(base, t.at("edges"));
  if (t.contains("feature_map")) plan.feature_map = resolve(base, t.at("feature_map"));
  if (t.contains("nodes")) plan.nodes = resolve(base, t.at("nodes"));
  plan.score_threshold = t.value("score_threshold", plan.score_threshold);
  if (t.contains("model")) {
    const json& m = t.at("model");
    plan.hidden = m.value("hidden", plan.hidden);
    if (m.contains("readout")) plan.readout = parse_readout(m.at("readout").get<std::string>());
    plan.dropout = m.value("dropout", plan.dropout);
  }
  TrainConfig& c = plan.train;
  c.epochs = t.value("epochs", c.epochs);
  c.learning_rate = t.value("learning_rate", c.learning_rate);
  c.beta1 = t.value("beta1", c.beta1);
  c.beta2 = t.value("beta2", c.beta2);
  c.adam_epsilon = t.value("adam_epsilon", c.adam_epsilon);
  c.batch_size = t.value("batch_size", c.batch_size);
  c.folds = t.value("folds", c.folds);
  c.patience = t.value("patience", c.patience);
  plan.parallel_folds = t.value("parallel_folds", plan.parallel_folds);
  return plan;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base) {
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("pipeline config must be a JSON object");
    PipelineConfig config;
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("synth")) config.synth = synth_config_from_json(doc.at("synth").dump());
    if (doc.contains("select")) {
      const json& s = doc.at("select");
      SelectSpec spec;
      if (s.contains("matrix")) spec.matrix = resolve(base, s.at("matrix"));
      if (s.contains("labels")) spec.labels = resolve(base, s.at("labels"));
      if (s.contains("mode")) spec.options.mode = parse_select_mode(s.at("mode").get<std::string>());
      if (s.contains("lambda")) spec.options.lambda = s.at("lambda").get<double>();
      if (s.contains("p_threshold")) spec.options.p_threshold = s.at("p_threshold").get<double>();
      spec.options.normal_label = s.value("normal_label", spec.options.normal_label);
      config.select = std::move(spec);
    }
    if (doc.contains("train")) config.train = parse_train(doc.at("train"), base);
    if (doc.contains("gradcheck")) {
      const json& g = doc.at("gradcheck");
      config.gradcheck.tolerance = g.value("tolerance", config.gradcheck.tolerance);
      config.gradcheck.step = g.value("step", config.gradcheck.step);
      config.gradcheck.max_entries = g.value("max_entries", config.gradcheck.max_entries);
    }
    if (doc.contains("eval")) {
      const json& e = doc.at("eval");
      config.eval = EvalSpec{resolve(base, e.at("predictions")), resolve(base, e.at("labels"))};
    }
    return config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_pipeline_config(buffer.str(), path.parent_path());
}

}  // namespace mogat

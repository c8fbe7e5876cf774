// mogat: file-mediated multi-omics GAT pipeline.
//
//   mogat synth     --preset complementary --seed 1 --out data/
//   mogat select    --matrix data/mrna.csv --labels data/labels.csv --mode mrna --out sel/
//   mogat train     --data data/ --seed 1 --out run/
//   mogat gradcheck --seed 0
//   mogat eval      --predictions run/predictions.csv --labels data/labels.csv

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mogat/error.hpp"
#include "mogat/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mogat;

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kEmptySelection = 3, kCvInfeasible = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool parallel_folds = false;
  std::optional<std::string> readout;
  std::optional<double> lambda;
  std::optional<double> threshold;

  std::string preset;
  std::string matrix, labels, mode, normal_label;
  std::string data_dir, predictions;
  std::vector<std::string> layers;
  std::vector<std::size_t> hidden;
  std::optional<std::size_t> epochs, batch_size, folds;
  std::optional<double> learning_rate, tolerance;
};

PipelineConfig base_config(const Options& o) {
  return o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
}

fs::path require_out(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  return o.out;
}

void check_exists(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("missing ") + what);
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

int cmd_synth(const Options& o) {
  const PipelineConfig pc = base_config(o);
  SynthConfig config;
  if (o.preset == "complementary") config = complementary_preset(0);
  else if (!o.preset.empty()) throw ConfigError("unknown preset '" + o.preset + "'");
  else if (pc.synth) config = *pc.synth;
  else throw ConfigError("synth needs --preset or a config with a \"synth\" block");
  if (o.seed) config.seed = *o.seed;
  else if (pc.seed) config.seed = *pc.seed;
  const SynthDataset data = generate(config);
  write_dataset(data, require_out(o));
  std::cout << "wrote " << data.layers[0].num_samples() << " samples, " << data.graph.num_nodes() << " nodes, "
            << data.graph.num_edges() << " edges to " << o.out << '\n';
  return kOk;
}

int cmd_select(const Options& o) {
  const PipelineConfig pc = base_config(o);
  SelectSpec spec = pc.select.value_or(SelectSpec{});
  if (!o.matrix.empty()) spec.matrix = o.matrix;
  if (!o.labels.empty()) spec.labels = o.labels;
  if (!o.mode.empty()) spec.options.mode = parse_select_mode(o.mode);
  if (!o.normal_label.empty()) spec.options.normal_label = o.normal_label;
  if (o.lambda) spec.options.lambda = *o.lambda;
  if (o.threshold) spec.options.p_threshold = *o.threshold;
  check_exists(spec.matrix, "matrix");
  check_exists(spec.labels, "labels");
  const fs::path out = require_out(o);

  const std::string layer = spec.options.mode == SelectMode::kMrna ? "mRNA" : "methylation";
  const OmicsMatrix matrix = load_matrix(spec.matrix, layer);
  const SampleLabels labels = load_labels(spec.labels);
  try {
    const SelectResult r = run_select(matrix, labels, spec.options);
    write_select_outputs(r, out);
    std::printf("features: %zu -> %zu (p < %g) -> %zu (lambda %g)\n", r.input_features, r.after_de, r.p_threshold,
                r.selected, r.lambda);
    std::printf("lambda_max %.10g\n", r.lambda_max);
  } catch (const EmptySelectionError&) {
    // Still useful to know where the boundary lies.
    SelectOptions probe = spec.options;
    probe.lambda = 0.0;
    try {
      std::printf("lambda_max %.10g\n", run_select(matrix, labels, probe).lambda_max);
    } catch (const Error&) {
    }
    throw;
  }
  return kOk;
}

int cmd_train(const Options& o) {
  const PipelineConfig pc = base_config(o);
  TrainPlan plan;
  if (!o.data_dir.empty()) plan = plan_for_dataset_dir(o.data_dir, o.layers);
  else if (pc.train) plan = *pc.train;
  else throw ConfigError("train needs --data or a config with a \"train\" block");
  if (!o.data_dir.empty() && pc.train) {
    // Keep model and optimizer settings from the config, files from --data.
    const TrainPlan files = plan;
    plan = *pc.train;
    plan.layers = files.layers;
    plan.labels = files.labels;
    plan.edges = files.edges;
    plan.feature_map = files.feature_map;
    plan.nodes = files.nodes;
  }
  if (o.seed) plan.train.seed = *o.seed;
  else if (pc.seed) plan.train.seed = *pc.seed;
  if (o.readout) plan.readout = parse_readout(*o.readout);
  if (o.threshold) plan.score_threshold = *o.threshold;
  if (!o.hidden.empty()) plan.hidden = o.hidden;
  if (o.epochs) plan.train.epochs = *o.epochs;
  if (o.batch_size) plan.train.batch_size = *o.batch_size;
  if (o.folds) plan.train.folds = *o.folds;
  if (o.learning_rate) plan.train.learning_rate = *o.learning_rate;
  plan.parallel_folds = plan.parallel_folds || o.parallel_folds;
  plan.train.validate();
  for (const auto& l : plan.layers) check_exists(l.path, "omics matrix");
  check_exists(plan.labels, "labels");
  check_exists(plan.edges, "edge list");
  check_exists(plan.feature_map, "feature map");
  const fs::path out = require_out(o);

  const TrainOutcome outcome = run_train(plan);
  write_train_outputs(outcome, out);
  const auto& report = outcome.run.report;
  for (std::size_t f = 0; f < report.folds.size(); ++f)
    std::printf("fold %zu: accuracy %.2f%%  macro F1 %.4f\n", f, 100.0 * report.folds[f].accuracy,
                report.folds[f].f1_macro);
  std::cout << report.summary_line() << '\n';
  return kOk;
}

int cmd_gradcheck(const Options& o) {
  const PipelineConfig pc = base_config(o);
  GradcheckSpec spec = pc.gradcheck;
  if (o.tolerance) spec.tolerance = *o.tolerance;
  else if (o.threshold) spec.tolerance = *o.threshold;
  const std::uint64_t seed = o.seed.value_or(pc.seed.value_or(0));
  const GradcheckOutcome outcome = run_gradcheck(seed, spec);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "gradcheck.json") << outcome.report_json() << '\n';
  }
  const auto& r = outcome.report;
  std::printf("%s: max relative error %.3e at %s (analytic %.10g, numeric %.10g), %zu of %zu entries, tolerance %g\n",
              r.passed ? "PASS" : "FAIL", r.max_error, outcome.worst_location().c_str(), r.worst_analytic,
              r.worst_numeric, r.entries_checked, outcome.total_entries, spec.tolerance);
  return r.passed ? kOk : kUnexpected;
}

int cmd_eval(const Options& o) {
  const PipelineConfig pc = base_config(o);
  EvalSpec spec = pc.eval.value_or(EvalSpec{});
  if (!o.predictions.empty()) spec.predictions = o.predictions;
  if (!o.labels.empty()) spec.labels = o.labels;
  check_exists(spec.predictions, "predictions");
  check_exists(spec.labels, "labels");
  const EvalResult r = evaluate_predictions(load_labels(spec.predictions), load_labels(spec.labels));
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "eval.json") << r.report_json() << '\n';
  }
  std::printf("samples %zu  accuracy %.2f%%  precision_macro %.4f  recall_macro %.4f  f1_macro %.4f\n",
              r.confusion.total(), r.accuracy, r.macro.precision, r.macro.recall, r.macro.f1);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-omics graph attention pipeline"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON pipeline configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Seed for every random stream");
    sub->add_option("--out", o.out, "Output directory");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-omics dataset");
  common(synth);
  synth->add_option("--preset", o.preset, "Named preset (complementary)");

  auto* select = app.add_subcommand("select", "Differential-expression filter followed by LASSO selection");
  common(select);
  select->add_option("--matrix", o.matrix, "Feature x sample matrix (.csv or .tsv)");
  select->add_option("--labels", o.labels, "sample_id,label file");
  select->add_option("--mode", o.mode, "mrna or methylation");
  select->add_option("--lambda", o.lambda, "LASSO penalty (default 0.1 * lambda_max)");
  select->add_option("--threshold", o.threshold, "p-value threshold (default 0.001 mrna, 0.05 methylation)");
  select->add_option("--normal-label", o.normal_label, "Label of the reference group (default Normal)");

  auto* train = app.add_subcommand("train", "Cross-validated GAT training");
  common(train);
  train->add_option("--data", o.data_dir, "Directory in the synth output layout");
  train->add_option("--layers", o.layers, "Layers to use with --data (mRNA, miRNA, methylation)")->delimiter(',');
  train->add_option("--readout", o.readout, "mean or flatten");
  train->add_option("--threshold", o.threshold, "Edge confidence threshold (default 0.7)");
  train->add_option("--hidden", o.hidden, "Hidden widths, e.g. 64,64,32,32")->delimiter(',');
  train->add_option("--epochs", o.epochs);
  train->add_option("--batch-size", o.batch_size, "0 = full batch");
  train->add_option("--folds", o.folds);
  train->add_option("--lr", o.learning_rate);
  train->add_flag("--parallel-folds", o.parallel_folds, "Train folds concurrently");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the GAT gradients");
  common(gradcheck);
  gradcheck->add_option("--tolerance", o.tolerance, "Maximum relative error (default 1e-4)");
  gradcheck->add_option("--threshold", o.threshold, "Alias of --tolerance");

  auto* eval = app.add_subcommand("eval", "Accuracy and macro scores of a predictions file");
  common(eval);
  eval->add_option("--predictions", o.predictions, "sample_id,label predictions");
  eval->add_option("--labels", o.labels, "sample_id,label truth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*select) return cmd_select(o);
    if (*train) return cmd_train(o);
    if (*gradcheck) return cmd_gradcheck(o);
    if (*eval) return cmd_eval(o);
  } catch (const EmptySelectionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEmptySelection;
  } catch (const CvInfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCvInfeasible;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}

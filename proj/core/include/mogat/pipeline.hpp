#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mogat/diffexpr.hpp"
#include "mogat/gat.hpp"
#include "mogat/grad_check.hpp"
#include "mogat/metrics.hpp"
#include "mogat/omics.hpp"
#include "mogat/ppi.hpp"
#include "mogat/synth.hpp"
#include "mogat/training.hpp"

namespace mogat {

// ---- select ---------------------------------------------------------------

enum class SelectMode { kMrna, kMethylation };

SelectMode parse_select_mode(const std::string& text);
std::string to_string(SelectMode mode);
/// 0.001 for mRNA, 0.05 for methylation.
double default_p_threshold(SelectMode mode);

struct SelectOptions {
  SelectMode mode = SelectMode::kMrna;
  std::optional<double> lambda;  // default: 0.1 * lambda_max
  std::optional<double> p_threshold;
  std::string normal_label = "Normal";
};

struct SelectResult {
  SelectMode mode = SelectMode::kMrna;
  std::string layer_name;
  std::size_t samples = 0;
  std::size_t input_features = 0;
  std::size_t after_de = 0;
  std::size_t selected = 0;
  double p_threshold = 0.0;
  double lambda = 0.0;
  double lambda_max = 0.0;
  EbPrior prior;
  std::vector<std::string> de_ids;
  std::vector<std::string> selected_ids;

  std::string report_json() const;
};

/// Moderated-t filter (tumor vs normal) followed by one-vs-rest LASSO over
/// the standardized survivors. Throws EmptySelectionError when either stage
/// leaves nothing.
SelectResult run_select(const OmicsMatrix& matrix, const SampleLabels& labels, const SelectOptions& options);

/// selected_features.txt and select_report.json.
void write_select_outputs(const SelectResult& result, const std::filesystem::path& dir);

std::vector<std::string> load_feature_list(const std::filesystem::path& path);

// ---- train ----------------------------------------------------------------

struct PreparedData {
  IntegratedDataset dataset;  // standardized
  PpiGraph graph;
  NodeFeatureSpec spec;
  GraphInputs inputs;
};

/// integrate -> standardize -> map features onto nodes -> per-sample grids.
PreparedData prepare_graph_data(const std::vector<OmicsMatrix>& layers, const SampleLabels& labels, PpiGraph graph,
                                const FeatureGeneMap& feature_map);

/// Keeps only the listed feature rows (in matrix order). Unknown IDs are an error.
OmicsMatrix restrict_features(const OmicsMatrix& matrix, const std::vector<std::string>& keep);

struct LayerSource {
  std::string name;
  std::filesystem::path path;
  bool log2 = false;  // apply log2(x + 1) after loading
  std::optional<std::filesystem::path> features;
};

struct TrainPlan {
  std::vector<LayerSource> layers;
  std::filesystem::path labels;
  std::filesystem::path edges;
  std::filesystem::path feature_map;
  std::optional<std::filesystem::path> nodes;
  double score_threshold = 0.7;
  std::vector<std::size_t> hidden{64, 64, 32, 32};
  Readout readout = Readout::kMean;
  double dropout = 0.5;
  TrainConfig train;
  bool parallel_folds = false;
};

/// Plan over the file layout written by write_dataset; `layer_names`
/// restricts the layers used (empty = all three).
TrainPlan plan_for_dataset_dir(const std::filesystem::path& dir, const std::vector<std::string>& layer_names = {});

struct TrainOutcome {
  PreparedData data;
  CvRun run;
};

ModelConfig model_config_for(const PreparedData& data, const std::vector<std::size_t>& hidden, Readout readout,
                             double dropout);

TrainOutcome train_prepared(PreparedData data, const ModelConfig& model, const TrainConfig& train,
                            bool parallel_folds = false);
TrainOutcome run_train(const TrainPlan& plan);

/// cv_report.json, predictions.csv and fold_<i>.json checkpoints.
void write_train_outputs(const TrainOutcome& outcome, const std::filesystem::path& dir);

// ---- gradcheck ------------------------------------------------------------

struct GradcheckSpec {
  double tolerance = 1e-4;
  double step = 1e-5;
  std::size_t max_entries = 400;
};

struct GradcheckOutcome {
  GradCheckReport report;
  std::vector<std::string> param_names;
  std::size_t total_entries = 0;

  std::string worst_location() const;
  std::string report_json() const;
};

/// Six-node, two-layer GAT with batch norm and head, dropout off.
GradcheckOutcome run_gradcheck(std::uint64_t seed, const GradcheckSpec& spec = {});

// ---- eval -----------------------------------------------------------------

struct EvalResult {
  std::vector<std::string> classes;
  ConfusionMatrix confusion;
  double accuracy = 0.0;  // percent
  MacroScores macro;

  std::string report_json() const;
};

/// Both inputs are sample_id,label files; every predicted sample needs a
/// true label.
EvalResult evaluate_predictions(const SampleLabels& predictions, const SampleLabels& truth);

// ---- configuration --------------------------------------------------------

struct SelectSpec {
  std::filesystem::path matrix;
  std::filesystem::path labels;
  SelectOptions options;
};

struct EvalSpec {
  std::filesystem::path predictions;
  std::filesystem::path labels;
};

struct PipelineConfig {
  std::optional<std::uint64_t> seed;
  std::optional<SynthConfig> synth;
  std::optional<SelectSpec> select;
  std::optional<TrainPlan> train;
  GradcheckSpec gradcheck;
  std::optional<EvalSpec> eval;
};

/// JSON pipeline configuration; relative paths resolve against the file's
/// directory. Throws ConfigError on unreadable or malformed input.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir);

}  // namespace mogat

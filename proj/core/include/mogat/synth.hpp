#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mogat/omics.hpp"
#include "mogat/ppi.hpp"

namespace mogat {

inline constexpr std::array<const char*, 3> kSynthLayers{"mRNA", "miRNA", "methylation"};

struct SynthConfig {
  std::size_t n_samples = 600;
  std::size_t n_classes = 4;
  std::size_t nodes = 60;
  std::size_t communities = 0;  // 0 = one per class
  double p_intra = 0.1;
  double p_inter = 0.005;
  std::array<std::size_t, 3> layer_features{120, 60, 80};  // mRNA, miRNA, methylation
  double informative_fraction = 0.3;
  double signal_strength = 2.0;  // class-mean shift in noise-sd units
  double noise_sd = 1.0;
  // Classes whose signal each layer carries; an empty list means all classes.
  std::array<std::vector<int>, 3> layer_signal;
  std::uint64_t seed = 0;

  std::size_t community_count() const { return communities == 0 ? n_classes : communities; }
  /// Throws ConfigError for infeasible settings.
  void validate() const;
};

struct InformativeFeature {
  std::string feature_id;
  std::size_t layer = 0;
  int cls = 0;
  std::size_t community = 0;
  double shift = 0.0;  // latent-scale mean shift for samples of `cls`
};

struct SynthDataset {
  SynthConfig config;
  std::vector<std::string> class_names;  // index = generator class id
  std::array<OmicsMatrix, 3> layers;     // mRNA counts, miRNA log-expression, methylation beta values
  SampleLabels labels;
  PpiGraph graph;
  FeatureGeneMap feature_map;
  std::vector<std::size_t> node_community;
  std::vector<InformativeFeature> informative;

  std::string manifest_json() const;
};

/// Deterministic in config.seed.
SynthDataset generate(const SynthConfig& config);

/// Writes mrna.csv, mirna.csv, methylation.csv, labels.csv, edges.tsv,
/// nodes.txt, feature_map.tsv and manifest.json into `dir` (created if missing).
void write_dataset(const SynthDataset& data, const std::filesystem::path& dir);

/// 8 classes, 200 nodes, (600, 300, 400) features; each layer carries the
/// signal of three classes, together covering all eight.
SynthConfig complementary_preset(std::uint64_t seed);

SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& config);

}  // namespace mogat

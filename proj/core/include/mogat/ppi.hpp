#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mogat/omics.hpp"

namespace mogat {

/// Undirected protein graph; edges stored once with first < second.
struct PpiGraph {
  std::vector<std::string> node_ids;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> scores;

  std::size_t num_nodes() const { return node_ids.size(); }
  std::size_t num_edges() const { return edges.size(); }
  std::optional<std::size_t> find(const std::string& id) const;
};

/// Rows protein1, protein2, score (tab separated, header row). Scores above 1
/// anywhere in the file switch the whole file to the STRING 0-999 scale.
/// Nodes are sorted lexicographically.
PpiGraph parse_edge_list(const std::filesystem::path& path, double score_threshold = 0.7,
                         const std::optional<std::filesystem::path>& node_file = std::nullopt);

/// Same parsing from already-split rows; used by the file loader and tests.
PpiGraph build_graph(const std::vector<std::tuple<std::string, std::string, double>>& rows, double score_threshold,
                     const std::vector<std::string>& extra_nodes = {});

void write_edge_list(const PpiGraph& graph, const std::filesystem::path& path);

using FeatureGeneMap = std::map<std::string, std::string>;

/// Two-column feature_id / gene_symbol TSV with header.
FeatureGeneMap load_feature_map(const std::filesystem::path& path);

enum class Aggregation { kMean, kPresence };

struct ChannelSource {
  Aggregation rule = Aggregation::kMean;
  std::vector<std::size_t> features;  // dataset feature indices
};

// d = 2 * L channels per node for L layers: channel 2k is the mean of the
// node's layer-k features, channel 2k+1 flags that any exist.
struct NodeFeatureSpec {
  std::size_t channels_per_node = 0;
  std::vector<std::vector<ChannelSource>> assignment;  // [node][channel]
  std::vector<std::size_t> unmapped_features;
};

NodeFeatureSpec map_features_to_nodes(const PpiGraph& graph, const FeatureGeneMap& feature_map,
                                      const std::vector<FeatureRef>& features, std::size_t num_layers);

/// Directed edge list shared by every sample, sorted by destination and
/// containing both directions of every undirected edge plus a self-loop per
/// node.
struct EdgeIndex {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;

  std::size_t size() const { return src.size(); }
};

EdgeIndex make_edge_index(const PpiGraph& graph);

struct GraphInputs {
  std::size_t num_nodes = 0;
  std::size_t channels = 0;
  // One row-major (nodes x channels) grid per sample.
  std::vector<std::vector<double>> grids;
  EdgeIndex edges;
};

GraphInputs build_sample_graph_inputs(const IntegratedDataset& dataset, const NodeFeatureSpec& spec,
                                      const PpiGraph& graph);

}  // namespace mogat

#include "mogat/ppi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <tuple>

#include "mogat/error.hpp"

namespace mogat {

std::optional<std::size_t> PpiGraph::find(const std::string& id) const {
  auto it = std::lower_bound(node_ids.begin(), node_ids.end(), id);
  if (it == node_ids.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - node_ids.begin());
}

PpiGraph build_graph(const std::vector<std::tuple<std::string, std::string, double>>& rows, double score_threshold,
                     const std::vector<std::string>& extra_nodes) {
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
    throw ConfigError("score threshold must lie in [0, 1]");
  const bool per_mille =
      std::any_of(rows.begin(), rows.end(), [](const auto& row) { return std::get<2>(row) > 1.0; });

  std::map<std::pair<std::string, std::string>, double> kept;
  for (const auto& [a, b, raw] : rows) {
    if (a == b) continue;
    const double score = per_mille ? raw / 1000.0 : raw;
    if (score < score_threshold) continue;
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto [it, inserted] = kept.emplace(key, score);
    if (!inserted) it->second = std::max(it->second, score);
  }

  std::set<std::string> nodes(extra_nodes.begin(), extra_nodes.end());
  for (const auto& [key, score] : kept) {
    nodes.insert(key.first);
    nodes.insert(key.second);
  }
  PpiGraph g;
  g.node_ids.assign(nodes.begin(), nodes.end());
  for (const auto& [key, score] : kept) {
    g.edges.emplace_back(*g.find(key.first), *g.find(key.second));
    g.scores.push_back(score);
  }
  return g;
}

PpiGraph parse_edge_list(const std::filesystem::path& path, double score_threshold,
                         const std::optional<std::filesystem::path>& node_file) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open edge list " + path.string());
  std::string line;
  std::vector<std::tuple<std::string, std::string, double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line, '\t');
    if (line_no == 1 && cells.size() >= 1 && cells[0] == "protein1") continue;
    if (cells.size() != 3 || cells[0].empty() || cells[1].empty())
      throw FormatError(path.string() + ": malformed edge row at line " + std::to_string(line_no));
    double score = 0.0;
    const auto& s = cells[2];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(score) || score < 0.0)
      throw FormatError(path.string() + ": bad score '" + s + "' at line " + std::to_string(line_no));
    rows.emplace_back(cells[0], cells[1], score);
  }

  std::vector<std::string> extra;
  if (node_file) {
    std::ifstream nodes(*node_file);
    if (!nodes) throw FormatError("cannot open node list " + node_file->string());
    while (std::getline(nodes, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) extra.push_back(line);
    }
  }
  return build_graph(rows, score_threshold, extra);
}

void write_edge_list(const PpiGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "protein1\tprotein2\tcombined_score\n";
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    out << graph.node_ids[graph.edges[e].first] << '\t' << graph.node_ids[graph.edges[e].second] << '\t'
        << static_cast<long>(std::lround(graph.scores[e] * 1000.0)) << '\n';
  }
}

FeatureGeneMap load_feature_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open feature map " + path.string());
  std::string line;
  FeatureGeneMap map;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line, '\t');
    if (line_no == 1 && !cells.empty() && cells[0] == "feature_id") continue;
    if (cells.size() != 2 || cells[0].empty())
      throw FormatError(path.string() + ": malformed feature map row at line " + std::to_string(line_no));
    if (cells[1].empty()) continue;
    map[cells[0]] = cells[1];
  }
  return map;
}

NodeFeatureSpec map_features_to_nodes(const PpiGraph& graph, const FeatureGeneMap& feature_map,
                                      const std::vector<FeatureRef>& features, std::size_t num_layers) {
  NodeFeatureSpec spec;
  spec.channels_per_node = 2 * num_layers;
  spec.assignment.assign(graph.num_nodes(), std::vector<ChannelSource>(spec.channels_per_node));
  for (auto& node : spec.assignment)
    for (std::size_t k = 0; k < num_layers; ++k) node[2 * k + 1].rule = Aggregation::kPresence;

  for (std::size_t f = 0; f < features.size(); ++f) {
    if (features[f].layer >= num_layers) throw ConfigError("feature layer index out of range");
    auto it = feature_map.find(features[f].id);
    std::optional<std::size_t> node;
    if (it != feature_map.end()) node = graph.find(it->second);
    if (!node) {
      spec.unmapped_features.push_back(f);
      continue;
    }
    const std::size_t k = features[f].layer;
    spec.assignment[*node][2 * k].features.push_back(f);
    spec.assignment[*node][2 * k + 1].features.push_back(f);
  }
  if (!spec.unmapped_features.empty())
    std::cerr << "warning: " << spec.unmapped_features.size() << " feature(s) have no node in the graph; dropped\n";
  return spec;
}

EdgeIndex make_edge_index(const PpiGraph& graph) {
  std::vector<std::pair<std::size_t, std::size_t>> directed;  // (dst, src)
  directed.reserve(2 * graph.num_edges() + graph.num_nodes());
  for (const auto& [a, b] : graph.edges) {
    if (a >= graph.num_nodes() || b >= graph.num_nodes()) throw ConfigError("edge endpoint out of range");
    directed.emplace_back(a, b);
    directed.emplace_back(b, a);
  }
  for (std::size_t v = 0; v < graph.num_nodes(); ++v) directed.emplace_back(v, v);
  std::sort(directed.begin(), directed.end());

  EdgeIndex index;
  index.num_nodes = graph.num_nodes();
  for (const auto& [dst, src] : directed) {
    index.dst.push_back(dst);
    index.src.push_back(src);
  }
  return index;
}

GraphInputs build_sample_graph_inputs(const IntegratedDataset& dataset, const NodeFeatureSpec& spec,
                                      const PpiGraph& graph) {
  if (spec.assignment.size() != graph.num_nodes()) throw ShapeError("node feature spec does not match graph");
  GraphInputs inputs;
  inputs.num_nodes = graph.num_nodes();
  inputs.channels = spec.channels_per_node;
  inputs.edges = make_edge_index(graph);
  const std::size_t d = spec.channels_per_node;
  inputs.grids.resize(dataset.num_samples());
  for (std::size_t s = 0; s < dataset.num_samples(); ++s) {
    auto& grid = inputs.grids[s];
    grid.assign(inputs.num_nodes * d, 0.0);
    for (std::size_t v = 0; v < inputs.num_nodes; ++v) {
      for (std::size_t c = 0; c < d; ++c) {
        const auto& source = spec.assignment[v][c];
        if (source.features.empty()) continue;
        if (source.rule == Aggregation::kPresence) {
          grid[v * d + c] = 1.0;
          continue;
        }
        double sum = 0.0;
        for (std::size_t f : source.features) {
          if (f >= dataset.num_features()) throw ShapeError("node feature spec refers past the dataset");
          sum += dataset.at(s, f);
        }
        grid[v * d + c] = sum / static_cast<double>(source.features.size());
      }
    }
  }
  return inputs;
}

}  // namespace mogat

#include "mogat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "mogat/error.hpp"

namespace mogat {

namespace {

using nlohmann::json;

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

// Alternating signs with growing magnitude so classes sharing a layer have
// distinct signatures: +1, -1, +2, -2, ...
double shift_multiplier(std::size_t rank) {
  const double magnitude = 1.0 + static_cast<double>(rank / 2);
  return rank % 2 == 0 ? magnitude : -magnitude;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void SynthConfig::validate() const {
  if (n_classes < 2) throw ConfigError("synth: n_classes must be >= 2");
  if (n_samples < n_classes) throw ConfigError("synth: fewer samples than classes");
  if (nodes == 0) throw ConfigError("synth: nodes must be positive");
  if (community_count() > nodes) throw ConfigError("synth: more communities than nodes");
  if (!(p_intra >= 0.0 && p_intra <= 1.0) || !(p_inter >= 0.0 && p_inter <= 1.0))
    throw ConfigError("synth: edge probabilities must lie in [0, 1]");
  for (std::size_t f : layer_features)
    if (f == 0) throw ConfigError("synth: every layer needs at least one feature");
  if (!(informative_fraction >= 0.0 && informative_fraction <= 1.0))
    throw ConfigError("synth: infeasible informative fraction (more informative features than features)");
  if (!(signal_strength >= 0.0)) throw ConfigError("synth: signal strength must be >= 0");
  if (!(noise_sd > 0.0)) throw ConfigError("synth: noise sd must be > 0");
  for (const auto& classes : layer_signal)
    for (int c : classes)
      if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw ConfigError("synth: signal class out of range");
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  SynthDataset data;
  data.config = config;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t K = config.n_classes;
  const std::size_t C = config.community_count();
  const std::size_t n = config.n_samples;

  // Class 0 plays the normal-tissue role; names sort in class-id order.
  data.class_names.push_back("Normal");
  for (std::size_t k = 1; k < K; ++k) data.class_names.push_back(padded("T", k, 2));

  std::vector<int> sample_class(n);
  for (std::size_t i = 0; i < n; ++i) sample_class[i] = static_cast<int>(i % K);
  std::shuffle(sample_class.begin(), sample_class.end(), rng);
  std::vector<std::string> sample_ids;
  for (std::size_t i = 0; i < n; ++i) {
    sample_ids.push_back(padded("S", i + 1, 5));
    data.labels[sample_ids.back()] = data.class_names[static_cast<std::size_t>(sample_class[i])];
  }

  // Stochastic block model over contiguous communities.
  std::vector<std::string> node_ids;
  std::vector<std::vector<std::size_t>> members(C);
  for (std::size_t v = 0; v < config.nodes; ++v) {
    node_ids.push_back(padded("G", v + 1, 4));
    const std::size_t community = v * C / config.nodes;
    data.node_community.push_back(community);
    members[community].push_back(v);
  }
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (std::size_t u = 0; u < config.nodes; ++u) {
    for (std::size_t v = u + 1; v < config.nodes; ++v) {
      const double p = data.node_community[u] == data.node_community[v] ? config.p_intra : config.p_inter;
      if (unit(rng) < p) rows.emplace_back(node_ids[u], node_ids[v], std::round(700.0 + 299.0 * unit(rng)));
    }
  }
  data.graph = build_graph(rows, 0.0, node_ids);

  static constexpr const char* kPrefix[3] = {"MRNA", "MIR", "CG"};
  for (std::size_t l = 0; l < 3; ++l) {
    OmicsMatrix& m = data.layers[l];
    m.layer_name = kSynthLayers[l];
    m.sample_ids = sample_ids;
    const std::size_t F = config.layer_features[l];

    std::vector<int> signal = config.layer_signal[l];
    if (signal.empty())
      for (std::size_t k = 0; k < K; ++k) signal.push_back(static_cast<int>(k));
    const auto n_informative = static_cast<std::size_t>(std::llround(config.informative_fraction * static_cast<double>(F)));

    std::vector<double> base(F), shift(F, 0.0);
    std::vector<int> feature_class(F, -1);
    for (std::size_t f = 0; f < F; ++f) {
      m.feature_ids.push_back(padded(kPrefix[l], f + 1, 5));
      std::size_t node;
      if (f < n_informative) {
        const std::size_t rank = f % signal.size();
        const int cls = signal[rank];
        const std::size_t community = static_cast<std::size_t>(cls) % C;
        const auto& pool = members[community];
        node = pool[static_cast<std::size_t>(unit(rng) * static_cast<double>(pool.size())) % pool.size()];
        feature_class[f] = cls;
        shift[f] = shift_multiplier(rank) * config.signal_strength * config.noise_sd;
        data.informative.push_back({m.feature_ids[f], l, cls, community, shift[f]});
      } else {
        node = static_cast<std::size_t>(unit(rng) * static_cast<double>(config.nodes)) % config.nodes;
      }
      data.feature_map[m.feature_ids[f]] = node_ids[node];
      switch (l) {
        case 0: base[f] = 4.0 + 6.0 * unit(rng); break;   // log2 expression level
        case 1: base[f] = 2.0 + 6.0 * unit(rng); break;
        default: base[f] = -2.0 + 4.0 * unit(rng); break;  // logit of the beta value
      }
    }

    m.values.resize(F * n);
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t s = 0; s < n; ++s) {
        double latent = base[f] + config.noise_sd * normal(rng);
        if (feature_class[f] == sample_class[s]) latent += shift[f];
        double value;
        switch (l) {
          case 0: value = std::max(0.0, std::round(std::exp2(latent) - 1.0)); break;
          case 1: value = latent; break;
          default:
            value = std::clamp(logistic(latent), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
            break;
        }
        m.values[f * n + s] = value;
      }
    }
  }
  return data;
}

std::string SynthDataset::manifest_json() const {
  json layers_json = json::array();
  for (std::size_t l = 0; l < 3; ++l) {
    std::vector<int> signal = config.layer_signal[l];
    if (signal.empty())
      for (std::size_t k = 0; k < config.n_classes; ++k) signal.push_back(static_cast<int>(k));
    std::vector<std::string> signal_names;
    for (int c : signal) signal_names.push_back(class_names[static_cast<std::size_t>(c)]);
    json informative_ids = json::array();
    for (const auto& f : informative)
      if (f.layer == l) informative_ids.push_back(f.feature_id);
    layers_json.push_back({{"name", layers[l].layer_name},
                           {"features", layers[l].num_features()},
                           {"signal_classes", signal_names},
                           {"informative_features", informative_ids}});
  }
  json informative_json = json::array();
  for (const auto& f : informative)
    informative_json.push_back({{"feature_id", f.feature_id},
                                {"layer", layers[f.layer].layer_name},
                                {"class", class_names[static_cast<std::size_t>(f.cls)]},
                                {"community", f.community},
                                {"shift", f.shift}});
  json doc = {{"generator", "mogat-synth"},
              {"config", json::parse(synth_config_to_json(config))},
              {"classes", class_names},
              {"samples", layers[0].num_samples()},
              {"nodes", graph.num_nodes()},
              {"edges", graph.num_edges()},
              {"node_community", node_community},
              {"layers", layers_json},
              {"informative", informative_json},
              {"files",
               {{"mRNA", "mrna.csv"},
                {"miRNA", "mirna.csv"},
                {"methylation", "methylation.csv"},
                {"labels", "labels.csv"},
                {"edges", "edges.tsv"},
                {"nodes", "nodes.txt"},
                {"feature_map", "feature_map.tsv"}}}};
  return doc.dump(2);
}

void write_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_matrix(data.layers[0], dir / "mrna.csv");
  write_matrix(data.layers[1], dir / "mirna.csv");
  write_matrix(data.layers[2], dir / "methylation.csv");
  write_labels(data.labels, dir / "labels.csv");
  write_edge_list(data.graph, dir / "edges.tsv");
  std::ofstream nodes(dir / "nodes.txt");
  if (!nodes) throw ConfigError("cannot write node list in " + dir.string());
  for (const auto& id : data.graph.node_ids) nodes << id << '\n';
  std::ofstream map(dir / "feature_map.tsv");
  if (!map) throw ConfigError("cannot write feature map in " + dir.string());
  map << "feature_id\tgene_symbol\n";
  for (const auto& [feature, gene] : data.feature_map) map << feature << '\t' << gene << '\n';
  std::ofstream manifest(dir / "manifest.json");
  if (!manifest) throw ConfigError("cannot write manifest in " + dir.string());
  manifest << data.manifest_json() << '\n';
}

SynthConfig complementary_preset(std::uint64_t seed) {
  SynthConfig c;
  c.n_samples = 2000;
  c.n_classes = 8;
  c.nodes = 200;
  c.p_intra = 0.1;
  c.p_inter = 0.005;
  c.layer_features = {600, 300, 400};
  c.informative_fraction = 0.3;
  c.signal_strength = 3.0;
  c.noise_sd = 1.0;
  c.layer_signal = {std::vector<int>{0, 1, 2}, std::vector<int>{3, 4, 5}, std::vector<int>{5, 6, 7}};
  c.seed = seed;
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json doc = {{"n_samples", c.n_samples},
              {"n_classes", c.n_classes},
              {"nodes", c.nodes},
              {"communities", c.communities},
              {"p_intra", c.p_intra},
              {"p_inter", c.p_inter},
              {"layer_features", c.layer_features},
              {"informative_fraction", c.informative_fraction},
              {"signal_strength", c.signal_strength},
              {"noise_sd", c.noise_sd},
              {"layer_signal", c.layer_signal},
              {"seed", c.seed}};
  return doc.dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    SynthConfig c;
    if (doc.contains("preset")) {
      if (doc.at("preset") != "complementary") throw ConfigError("synth: unknown preset " + doc.at("preset").dump());
      c = complementary_preset(doc.value("seed", std::uint64_t{0}));
    }
    c.n_samples = doc.value("n_samples", c.n_samples);
    c.n_classes = doc.value("n_classes", c.n_classes);
    c.nodes = doc.value("nodes", c.nodes);
    c.communities = doc.value("communities", c.communities);
    c.p_intra = doc.value("p_intra", c.p_intra);
    c.p_inter = doc.value("p_inter", c.p_inter);
    c.layer_features = doc.value("layer_features", c.layer_features);
    c.informative_fraction = doc.value("informative_fraction", c.informative_fraction);
    c.signal_strength = doc.value("signal_strength", c.signal_strength);
    c.noise_sd = doc.value("noise_sd", c.noise_sd);
    c.layer_signal = doc.value("layer_signal", c.layer_signal);
    c.seed = doc.value("seed", c.seed);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
}

}  // namespace mogat

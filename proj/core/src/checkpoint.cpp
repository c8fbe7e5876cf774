#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mogat/error.hpp"
#include "mogat/gat.hpp"

namespace mogat {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

json tensor_to_json(const Tensor& t) { return json{{"rows", t.rows()}, {"cols", t.cols()}, {"data", t.values()}}; }

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

}  // namespace

std::string checkpoint_json(const GatModel& model) {
  const auto& c = model.config;
  json doc;
  doc["format"] = "mogat-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["seed"] = model.seed;
  doc["config"] = {{"dims", c.dims},
                   {"num_classes", c.num_classes},
                   {"num_nodes", c.num_nodes},
                   {"readout", to_string(c.readout)},
                   {"dropout", c.dropout},
                   {"attention_slope", c.attention_slope},
                   {"activation_slope", c.activation_slope},
                   {"bn_momentum", c.bn_momentum},
                   {"bn_epsilon", c.bn_epsilon}};
  json layers = json::array();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    layers.push_back({{"weight", tensor_to_json(model.layers[l].weight)},
                      {"attention", tensor_to_json(model.layers[l].attention)},
                      {"bn_gamma", tensor_to_json(model.norms[l].gamma)},
                      {"bn_beta", tensor_to_json(model.norms[l].beta)},
                      {"bn_running_mean", tensor_to_json(model.norms[l].running_mean)},
                      {"bn_running_var", tensor_to_json(model.norms[l].running_var)}});
  }
  doc["layers"] = std::move(layers);
  doc["head"] = {{"weight", tensor_to_json(model.head_weight)}, {"bias", tensor_to_json(model.head_bias)}};
  return doc.dump(1);
}

GatModel checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (doc.at("format") != "mogat-checkpoint") throw FormatError("checkpoint: unknown format tag");
    if (doc.at("version").get<int>() != kCheckpointVersion)
      throw FormatError("checkpoint: unsupported version " + doc.at("version").dump());
    GatModel model;
    model.seed = doc.at("seed").get<std::uint64_t>();
    const json& c = doc.at("config");
    model.config.dims = c.at("dims").get<std::vector<std::size_t>>();
    model.config.num_classes = c.at("num_classes").get<std::size_t>();
    model.config.num_nodes = c.at("num_nodes").get<std::size_t>();
    model.config.readout = parse_readout(c.at("readout").get<std::string>());
    model.config.dropout = c.at("dropout").get<double>();
    model.config.attention_slope = c.at("attention_slope").get<double>();
    model.config.activation_slope = c.at("activation_slope").get<double>();
    model.config.bn_momentum = c.at("bn_momentum").get<double>();
    model.config.bn_epsilon = c.at("bn_epsilon").get<double>();
    model.config.validate();
    for (const json& l : doc.at("layers")) {
      model.layers.push_back({tensor_from_json(l.at("weight")), tensor_from_json(l.at("attention"))});
      model.norms.push_back({tensor_from_json(l.at("bn_gamma")), tensor_from_json(l.at("bn_beta")),
                             tensor_from_json(l.at("bn_running_mean")), tensor_from_json(l.at("bn_running_var"))});
    }
    model.head_weight = tensor_from_json(doc.at("head").at("weight"));
    model.head_bias = tensor_from_json(doc.at("head").at("bias"));
    if (model.layers.size() != model.config.num_layers()) throw FormatError("checkpoint: layer count mismatch");
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const std::size_t fin = model.config.dims[l], fout = model.config.dims[l + 1];
      if (model.layers[l].weight.rows() != fin || model.layers[l].weight.cols() != fout ||
          model.layers[l].attention.rows() != 2 * fout || model.norms[l].gamma.cols() != fout)
        throw FormatError("checkpoint: layer " + std::to_string(l) + " shape mismatch");
    }
    if (model.head_weight.rows() != model.config.readout_dim() ||
        model.head_weight.cols() != model.config.num_classes || model.head_bias.cols() != model.config.num_classes)
      throw FormatError("checkpoint: head shape mismatch");
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const GatModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out << checkpoint_json(model) << '\n';
}

GatModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace mogat

#include "mogat/omics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mogat/error.hpp"

namespace mogat {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, delimiter)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delimiter) out.emplace_back();
  return out;
}

char delimiter_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ',' : '\t';
}

void OmicsMatrix::validate() const {
  if (values.size() != feature_ids.size() * sample_ids.size())
    throw FormatError("matrix '" + layer_name + "': grid size does not match id lists");
  std::unordered_set<std::string> seen;
  for (const auto& id : feature_ids)
    if (!seen.insert(id).second) throw FormatError("matrix '" + layer_name + "': duplicate feature id " + id);
  seen.clear();
  for (const auto& id : sample_ids)
    if (!seen.insert(id).second) throw FormatError("matrix '" + layer_name + "': duplicate sample id " + id);
  for (double v : values)
    if (!std::isfinite(v)) throw FormatError("matrix '" + layer_name + "': non-finite value");
}

OmicsMatrix load_matrix(const std::filesystem::path& path, const std::string& layer_name) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open matrix file " + path.string());
  const char delim = delimiter_for(path);

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw FormatError("empty matrix file " + path.string());
  auto header = split_line(line, delim);
  if (header.size() < 2) throw FormatError(path.string() + ": header has no sample columns");
  if (!header[0].empty() && header[0] != "feature_id")
    throw FormatError(path.string() + ": first header cell must be empty or 'feature_id'");

  OmicsMatrix m;
  m.layer_name = layer_name;
  std::vector<std::size_t> keep;  // header column index of each retained sample
  std::unordered_set<std::string> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw FormatError(path.string() + ": empty sample id in column " + std::to_string(c + 1));
    if (seen.insert(header[c]).second) {
      m.sample_ids.push_back(header[c]);
      keep.push_back(c);
    } else {
      ++m.duplicates_dropped;
    }
  }
  if (m.duplicates_dropped > 0)
    std::cerr << "warning: " << path.string() << ": dropped " << m.duplicates_dropped
              << " duplicate sample column(s), kept first occurrence\n";

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line, delim);
    if (cells.size() != header.size())
      throw FormatError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    m.feature_ids.push_back(cells[0]);
    for (std::size_t c : keep) {
      double v = 0.0;
      if (!parse_double(cells[c], v))
        throw FormatError(path.string() + ": unparseable cell '" + cells[c] + "' at row " + std::to_string(row) +
                          ", column " + std::to_string(c + 1) + " (sample " + header[c] + ")");
      m.values.push_back(v);
    }
  }
  if (m.feature_ids.empty()) throw FormatError("matrix file " + path.string() + " has no feature rows");
  m.validate();
  return m;
}

SampleLabels load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open labels file " + path.string());
  const char delim = delimiter_for(path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty labels file " + path.string());
  SampleLabels labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line, delim);
    if (cells.size() != 2 || cells[0].empty() || cells[1].empty())
      throw FormatError(path.string() + ": malformed label row " + std::to_string(row));
    if (!labels.emplace(cells[0], cells[1]).second)
      throw FormatError(path.string() + ": sample " + cells[0] + " labelled twice");
  }
  if (labels.empty()) throw FormatError("labels file " + path.string() + " has no entries");
  return labels;
}

void write_matrix(const OmicsMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  const char delim = delimiter_for(path);
  out << "feature_id";
  for (const auto& s : matrix.sample_ids) out << delim << s;
  out << '\n';
  for (std::size_t f = 0; f < matrix.num_features(); ++f) {
    out << matrix.feature_ids[f];
    for (std::size_t s = 0; s < matrix.num_samples(); ++s) out << delim << format_double(matrix.at(f, s));
    out << '\n';
  }
}

void write_labels(const SampleLabels& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  const char delim = delimiter_for(path);
  out << "sample_id" << delim << "label\n";
  for (const auto& [sample, label] : labels) out << sample << delim << label << '\n';
}

std::pair<LabelEncoding, std::vector<int>> encode_labels(const SampleLabels& labels,
                                                         const std::vector<std::string>& sample_ids) {
  std::set<std::string> distinct;
  for (const auto& s : sample_ids) {
    auto it = labels.find(s);
    if (it == labels.end()) throw ConfigError("sample " + s + " has no label");
    if (it->second.empty()) throw ConfigError("sample " + s + " has an empty label");
    distinct.insert(it->second);
  }
  if (distinct.size() < 2)
    throw ConfigError("need at least two distinct class labels, found " + std::to_string(distinct.size()));

  LabelEncoding enc;
  enc.classes.assign(distinct.begin(), distinct.end());
  for (std::size_t k = 0; k < enc.classes.size(); ++k) enc.index[enc.classes[k]] = static_cast<int>(k);

  std::vector<int> targets;
  targets.reserve(sample_ids.size());
  for (const auto& s : sample_ids) targets.push_back(enc.index.at(labels.at(s)));
  return {std::move(enc), std::move(targets)};
}

IntegratedDataset integrate(const std::vector<OmicsMatrix>& layers, const SampleLabels& labels) {
  if (layers.empty()) throw ConfigError("integrate: no layers given");
  for (const auto& layer : layers) layer.validate();

  std::set<std::string> common;
  for (const auto& [sample, label] : labels) common.insert(sample);
  for (const auto& layer : layers) {
    std::set<std::string> present(layer.sample_ids.begin(), layer.sample_ids.end());
    std::set<std::string> next;
    std::set_intersection(common.begin(), common.end(), present.begin(), present.end(),
                          std::inserter(next, next.end()));
    common = std::move(next);
  }
  if (common.empty()) throw ConfigError("integrate: no common samples");

  IntegratedDataset ds;
  ds.sample_ids.assign(common.begin(), common.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    ds.layer_names.push_back(layers[l].layer_name);
    for (const auto& f : layers[l].feature_ids) ds.features.push_back({f, l});
  }

  const std::size_t n = ds.sample_ids.size();
  const std::size_t p = ds.features.size();
  ds.values.assign(n * p, 0.0);
  std::size_t offset = 0;
  for (const auto& layer : layers) {
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t s = 0; s < layer.num_samples(); ++s) col.emplace(layer.sample_ids[s], s);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = col.at(ds.sample_ids[i]);
      for (std::size_t f = 0; f < layer.num_features(); ++f) ds.values[i * p + offset + f] = layer.at(f, s);
    }
    offset += layer.num_features();
  }

  auto [enc, targets] = encode_labels(labels, ds.sample_ids);
  ds.encoding = std::move(enc);
  ds.targets = std::move(targets);
  return ds;
}

std::vector<OmicsMatrix> split_layers(const IntegratedDataset& dataset) {
  std::vector<OmicsMatrix> out(dataset.layer_names.size());
  std::vector<std::vector<std::size_t>> columns(out.size());
  for (std::size_t l = 0; l < out.size(); ++l) {
    out[l].layer_name = dataset.layer_names[l];
    out[l].sample_ids = dataset.sample_ids;
  }
  for (std::size_t f = 0; f < dataset.num_features(); ++f) {
    const auto& ref = dataset.features[f];
    out[ref.layer].feature_ids.push_back(ref.id);
    columns[ref.layer].push_back(f);
  }
  const std::size_t n = dataset.num_samples();
  for (std::size_t l = 0; l < out.size(); ++l) {
    out[l].values.resize(columns[l].size() * n);
    for (std::size_t r = 0; r < columns[l].size(); ++r)
      for (std::size_t s = 0; s < n; ++s) out[l].values[r * n + s] = dataset.at(s, columns[l][r]);
  }
  return out;
}

SampleLabels labels_of(const IntegratedDataset& dataset) {
  SampleLabels labels;
  for (std::size_t i = 0; i < dataset.num_samples(); ++i)
    labels.emplace(dataset.sample_ids[i], dataset.encoding.classes[static_cast<std::size_t>(dataset.targets[i])]);
  return labels;
}

ColumnScaling standardize_columns(std::vector<double>& values, std::size_t rows, std::size_t cols) {
  if (rows < 2) throw ConfigError("standardize_columns: need at least two rows");
  ColumnScaling scaling;
  scaling.mean.assign(cols, 0.0);
  scaling.sd.assign(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) sum += values[r * cols + c];
    const double mean = sum / static_cast<double>(rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = values[r * cols + c] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(rows));
    scaling.mean[c] = mean;
    // Columns whose spread is pure roundoff count as constant.
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    scaling.sd[c] = constant ? 0.0 : sd;
    for (std::size_t r = 0; r < rows; ++r) {
      double& v = values[r * cols + c];
      v = constant ? 0.0 : (v - mean) / sd;
    }
  }
  return scaling;
}

ColumnScaling standardize_columns(IntegratedDataset& dataset) {
  return standardize_columns(dataset.values, dataset.num_samples(), dataset.num_features());
}

}  // namespace mogat

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mogat {

/// One omics layer, features in rows and samples in columns.
struct OmicsMatrix {
  std::string layer_name;
  std::vector<std::string> feature_ids;
  std::vector<std::string> sample_ids;
  // Row-major, feature_ids.size() x sample_ids.size().
  std::vector<double> values;
  // Sample columns discarded while loading because their ID repeated.
  std::size_t duplicates_dropped = 0;

  std::size_t num_features() const { return feature_ids.size(); }
  std::size_t num_samples() const { return sample_ids.size(); }
  double at(std::size_t feature, std::size_t sample) const {
    return values[feature * sample_ids.size() + sample];
  }

  /// Throws FormatError when ids repeat, dimensions disagree, or a value is
  /// not finite.
  void validate() const;
};

using SampleLabels = std::map<std::string, std::string>;

struct LabelEncoding {
  std::vector<std::string> classes;  // lexicographic
  std::map<std::string, int> index;

  std::size_t num_classes() const { return classes.size(); }
};

struct FeatureRef {
  std::string id;
  std::size_t layer = 0;  // position in the layer list given to integrate()
};

struct IntegratedDataset {
  std::vector<std::string> sample_ids;
  std::vector<FeatureRef> features;
  std::vector<std::string> layer_names;
  // Row-major, samples x features.
  std::vector<double> values;
  std::vector<int> targets;
  LabelEncoding encoding;

  std::size_t num_samples() const { return sample_ids.size(); }
  std::size_t num_features() const { return features.size(); }
  double at(std::size_t sample, std::size_t feature) const {
    return values[sample * features.size() + feature];
  }
};

/// Reads a CSV (.csv) or TSV (anything else) matrix whose header row holds
/// sample IDs and whose first column holds feature IDs. Repeated sample
/// columns keep their first occurrence.
OmicsMatrix load_matrix(const std::filesystem::path& path, const std::string& layer_name);

/// Two-column sample_id,label file with a header row.
SampleLabels load_labels(const std::filesystem::path& path);

void write_matrix(const OmicsMatrix& matrix, const std::filesystem::path& path);
void write_labels(const SampleLabels& labels, const std::filesystem::path& path);

/// Lexicographically ordered classes; throws if fewer than two distinct
/// labels or a sample lacks a label.
std::pair<LabelEncoding, std::vector<int>> encode_labels(const SampleLabels& labels,
                                                         const std::vector<std::string>& sample_ids);

/// Inner join on sample ID across all layers and the label keys.
IntegratedDataset integrate(const std::vector<OmicsMatrix>& layers, const SampleLabels& labels);

/// Splits an integrated table back into per-layer matrices (features x
/// samples), in provenance order.
std::vector<OmicsMatrix> split_layers(const IntegratedDataset& dataset);

/// Label map restricted to the dataset's samples, decoded from its targets.
SampleLabels labels_of(const IntegratedDataset& dataset);

struct ColumnScaling {
  std::vector<double> mean;
  std::vector<double> sd;  // population sd; 0 for constant columns
};

/// Centers each feature column and divides by its population standard
/// deviation in place. Constant columns become all zero.
ColumnScaling standardize_columns(IntegratedDataset& dataset);

/// Same transform on a bare row-major (rows x cols) grid.
ColumnScaling standardize_columns(std::vector<double>& values, std::size_t rows, std::size_t cols);

/// Splits a delimited text line. Quoting is not supported.
std::vector<std::string> split_line(const std::string& line, char delimiter);
char delimiter_for(const std::filesystem::path& path);

}  // namespace mogat

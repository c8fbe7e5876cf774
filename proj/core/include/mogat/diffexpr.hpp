#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mogat/omics.hpp"

namespace mogat {

// Two-group per-feature summaries: effect = mean(group 1) - mean(group 0),
// resid_var = pooled within-group variance on n0 + n1 - 2 df.
struct PerFeatureStats {
  std::vector<double> effect;
  std::vector<double> resid_var;
  double df = 0.0;
  std::size_t n0 = 0;
  std::size_t n1 = 0;

  std::size_t size() const { return effect.size(); }
};

// Scaled inverse chi-square prior on the feature variances. d0 may be
// +infinity (all variances shrink to s0_sq) or 0 (no moderation).
struct EbPrior {
  double d0 = 0.0;
  double s0_sq = 1.0;
};

struct ModeratedTests {
  std::vector<double> t;
  std::vector<double> total_df;
  std::vector<double> p;
};

/// group_of[s] in {0, 1} for every sample column of the matrix.
PerFeatureStats group_stats(const OmicsMatrix& matrix, const std::vector<int>& group_of);

/// Convenience: group 0 = samples labelled `normal_label`, 1 = everything else.
std::vector<int> tumor_normal_groups(const OmicsMatrix& matrix, const SampleLabels& labels,
                                     const std::string& normal_label);

/// Method-of-moments fit of (d0, s0^2) to the log residual variances.
EbPrior estimate_prior(const PerFeatureStats& stats);

ModeratedTests moderated_t(const PerFeatureStats& stats, const EbPrior& prior);

/// Indices with p < threshold, ascending.
std::vector<std::size_t> filter_by_p(const std::vector<double>& p, double threshold);

/// log2(count + 1) applied to every value (mRNA counts).
OmicsMatrix log2_counts(OmicsMatrix counts);

}  // namespace mogat

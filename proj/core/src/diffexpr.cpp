#include "mogat/diffexpr.hpp"

#include <cmath>
#include <limits>

#include "mogat/error.hpp"
#include "mogat/special.hpp"

namespace mogat {

PerFeatureStats group_stats(const OmicsMatrix& matrix, const std::vector<int>& group_of) {
  if (group_of.size() != matrix.num_samples()) throw ShapeError("group_stats: group vector length != sample count");
  PerFeatureStats stats;
  for (int g : group_of) {
    if (g == 0) ++stats.n0;
    else if (g == 1) ++stats.n1;
    else throw ConfigError("group_stats: group labels must be 0 or 1");
  }
  if (stats.n0 < 2 || stats.n1 < 2)
    throw ConfigError("group_stats: each group needs at least 2 samples (got " + std::to_string(stats.n0) + ", " +
                      std::to_string(stats.n1) + ")");
  stats.df = static_cast<double>(stats.n0 + stats.n1 - 2);

  const std::size_t p = matrix.num_features();
  const std::size_t n = matrix.num_samples();
  stats.effect.resize(p);
  stats.resid_var.resize(p);
  for (std::size_t f = 0; f < p; ++f) {
    double sum[2] = {0.0, 0.0};
    for (std::size_t s = 0; s < n; ++s) sum[group_of[s]] += matrix.at(f, s);
    const double mean[2] = {sum[0] / static_cast<double>(stats.n0), sum[1] / static_cast<double>(stats.n1)};
    double ss = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double d = matrix.at(f, s) - mean[group_of[s]];
      ss += d * d;
    }
    stats.effect[f] = mean[1] - mean[0];
    stats.resid_var[f] = ss / stats.df;
  }
  return stats;
}

std::vector<int> tumor_normal_groups(const OmicsMatrix& matrix, const SampleLabels& labels,
                                     const std::string& normal_label) {
  std::vector<int> groups;
  groups.reserve(matrix.num_samples());
  for (const auto& s : matrix.sample_ids) {
    auto it = labels.find(s);
    if (it == labels.end()) throw ConfigError("sample " + s + " has no label");
    groups.push_back(it->second == normal_label ? 0 : 1);
  }
  return groups;
}

EbPrior estimate_prior(const PerFeatureStats& stats) {
  std::vector<double> e;
  double trigamma_mean = 0.0;
  const double half_df = 0.5 * stats.df;
  for (double s2 : stats.resid_var) {
    if (!(s2 > 0.0)) continue;
    e.push_back(std::log(s2) - special::digamma(half_df) + std::log(half_df));
  }
  if (e.empty()) throw NumericError("estimate_prior: degenerate variances (all zero)");
  if (e.size() < 2) throw NumericError("estimate_prior: need at least two features with positive variance");
  trigamma_mean = special::trigamma(half_df);

  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(e.size());
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  var /= static_cast<double>(e.size() - 1);

  EbPrior prior;
  const double excess = var - trigamma_mean;
  if (excess > 0.0) {
    prior.d0 = 2.0 * special::trigamma_inverse(excess);
    prior.s0_sq = std::exp(mean + special::digamma(0.5 * prior.d0) - std::log(0.5 * prior.d0));
  } else {
    prior.d0 = std::numeric_limits<double>::infinity();
    prior.s0_sq = std::exp(mean);
  }
  return prior;
}

ModeratedTests moderated_t(const PerFeatureStats& stats, const EbPrior& prior) {
  if (!(prior.d0 >= 0.0)) throw ConfigError("moderated_t: prior d0 must be >= 0");
  if (prior.d0 > 0.0 && !(prior.s0_sq > 0.0)) throw ConfigError("moderated_t: prior s0^2 must be > 0");
  const std::size_t p = stats.size();
  const double scale = 1.0 / static_cast<double>(stats.n0) + 1.0 / static_cast<double>(stats.n1);
  ModeratedTests out;
  out.t.resize(p);
  out.total_df.resize(p);
  out.p.resize(p);
  const bool infinite_prior = std::isinf(prior.d0);
  for (std::size_t f = 0; f < p; ++f) {
    double post_var;
    if (infinite_prior) post_var = prior.s0_sq;
    else if (prior.d0 == 0.0) post_var = stats.resid_var[f];
    else post_var = (prior.d0 * prior.s0_sq + stats.df * stats.resid_var[f]) / (prior.d0 + stats.df);

    const double df = prior.d0 + stats.df;
    const double effect = stats.effect[f];
    out.total_df[f] = df;
    if (post_var > 0.0) {
      out.t[f] = effect / std::sqrt(post_var * scale);
      out.p[f] = std::max(special::student_t_two_sided(out.t[f], df), std::numeric_limits<double>::denorm_min());
    } else if (effect == 0.0) {
      out.t[f] = 0.0;
      out.p[f] = 1.0;
    } else {
      out.t[f] = std::copysign(std::numeric_limits<double>::infinity(), effect);
      out.p[f] = std::numeric_limits<double>::denorm_min();
    }
  }
  return out;
}

std::vector<std::size_t> filter_by_p(const std::vector<double>& p, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("filter_by_p: threshold must lie in (0, 1)");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] < threshold) keep.push_back(i);
  return keep;
}

OmicsMatrix log2_counts(OmicsMatrix counts) {
  for (double& v : counts.values) {
    if (v < 0.0) throw FormatError("log2_counts: negative count in layer " + counts.layer_name);
    v = std::log2(v + 1.0);
  }
  return counts;
}

}  // namespace mogat

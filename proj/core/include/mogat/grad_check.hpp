#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mogat/tape.hpp"

namespace mogat {

/// Builds a scalar loss on `tape` from leaf handles of the parameters, in
/// the order they were given.
using LossFunction = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Every entry is checked when the total is at most this; otherwise a
  // seeded subsample of exactly this many entries.
  std::size_t max_entries = 400;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

/// Compares reverse-mode gradients with central differences. The relative
/// error of an entry is |analytic - numeric| / max(1, |analytic|, |numeric|).
/// Throws NumericError when two evaluations at the same point disagree
/// (e.g. an unfrozen dropout mask).
GradCheckReport grad_check(const LossFunction& fn, std::vector<Tensor>& params, const GradCheckOptions& options = {});

}  // namespace mogat

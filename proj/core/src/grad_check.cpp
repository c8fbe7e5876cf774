#include "mogat/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mogat/error.hpp"

namespace mogat {

namespace {

double evaluate(const LossFunction& fn, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  return fn(tape, vars).value().item();
}

}  // namespace

GradCheckReport grad_check(const LossFunction& fn, std::vector<Tensor>& params, const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  double base = 0.0;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.leaf(p));
    Var loss = fn(tape, vars);
    base = loss.value().item();
    tape.backward(loss);
    for (const Var& v : vars) analytic.push_back(v.grad());
  }
  if (evaluate(fn, params) != base)
    throw NumericError("grad_check: loss is not deterministic (freeze dropout masks before checking)");

  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].size(); ++i) entries.emplace_back(p, i);
  if (entries.size() > options.max_entries) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(entries.begin(), entries.end(), rng);
    entries.resize(options.max_entries);
    std::sort(entries.begin(), entries.end());
  }

  GradCheckReport report;
  for (const auto& [p, i] : entries) {
    double& theta = params[p][i];
    const double saved = theta;
    theta = saved + options.step;
    const double plus = evaluate(fn, params);
    theta = saved - options.step;
    const double minus = evaluate(fn, params);
    theta = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[p][i];
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    if (err >= report.max_error) {
      report.max_error = err;
      report.worst_param = p;
      report.worst_entry = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
    ++report.entries_checked;
  }
  report.passed = report.max_error < options.tolerance;
  return report;
}

}  // namespace mogat

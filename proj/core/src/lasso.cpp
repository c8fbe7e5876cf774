#include "mogat/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mogat/error.hpp"

namespace mogat {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// y - mean(y); lambda_max and the first sweep of lasso_fit both start here so
// that lambda = lambda_max lands exactly on the threshold.
std::vector<double> centered(const std::vector<double>& y, double& mean) {
  mean = mean_of(y);
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - mean;
  return r;
}

std::vector<double> indicator(const std::vector<int>& targets, int cls) {
  std::vector<double> y(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) y[i] = targets[i] == cls ? 1.0 : 0.0;
  const double m = mean_of(y);
  for (double& v : y) v -= m;
  return y;
}

}  // namespace

DesignMatrix DesignMatrix::from_row_major(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols) throw ShapeError("DesignMatrix: value count does not match shape");
  DesignMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.data.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m.data[c * rows + r] = values[r * cols + c];
  return m;
}

void LassoProblem::validate() const {
  if (x.rows < 2) throw ConfigError("lasso: need at least 2 samples");
  if (x.cols < 1) throw ConfigError("lasso: need at least 1 feature");
  if (y.size() != x.rows) throw ShapeError("lasso: y length != number of rows");
  if (x.data.size() != x.rows * x.cols) throw ShapeError("lasso: design data size mismatch");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lasso: lambda must be finite and >= 0");
  for (double v : x.data)
    if (!std::isfinite(v)) throw NumericError("lasso: non-finite design value");
  for (double v : y)
    if (!std::isfinite(v)) throw NumericError("lasso: non-finite target value");
}

double lasso_objective(const LassoProblem& problem, double beta0, const std::vector<double>& beta) {
  const auto& x = problem.x;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double fitted = beta0;
    for (std::size_t j = 0; j < x.cols; ++j) fitted += beta[j] * x.at(i, j);
    const double r = problem.y[i] - fitted;
    rss += r * r;
  }
  double l1 = 0.0;
  for (double b : beta) l1 += std::abs(b);
  return rss + problem.lambda * l1;
}

LassoFit lasso_fit(const LassoProblem& problem, double tol, std::size_t max_sweeps) {
  problem.validate();
  const auto& x = problem.x;
  const std::size_t n = x.rows;
  const std::size_t p = x.cols;

  std::vector<double> sq_norm(p);
  for (std::size_t j = 0; j < p; ++j) sq_norm[j] = dot(x.column(j), x.column(j), n);

  LassoFit fit;
  fit.beta.assign(p, 0.0);
  std::vector<double> r = centered(problem.y, fit.beta0);
  const double half_lambda = 0.5 * problem.lambda;

  auto objective = [&] {
    double rss = 0.0;
    for (double v : r) rss += v * v;
    double l1 = 0.0;
    for (double b : fit.beta) l1 += std::abs(b);
    return rss + problem.lambda * l1;
  };

  for (fit.sweeps = 0; fit.sweeps < max_sweeps;) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (sq_norm[j] == 0.0) continue;
      const double* col = x.column(j);
      const double old = fit.beta[j];
      const double z = dot(col, r.data(), n) + sq_norm[j] * old;
      const double updated = soft_threshold(z, half_lambda) / sq_norm[j];
      const double delta = updated - old;
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) r[i] -= delta * col[i];
        fit.beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    // Unpenalized intercept, closed form: shift by the residual mean.
    const double shift = mean_of(r);
    if (shift != 0.0) {
      for (double& v : r) v -= shift;
      fit.beta0 += shift;
      max_change = std::max(max_change, std::abs(shift));
    }
    ++fit.sweeps;
    fit.objective_trace.push_back(objective());
    if (max_change < tol) {
      fit.converged = true;
      break;
    }
  }
  for (double b : fit.beta)
    if (!std::isfinite(b)) throw NumericError("lasso: coefficients diverged");
  return fit;
}

double lambda_max(const LassoProblem& problem) {
  const auto& x = problem.x;
  double mean = 0.0;
  const std::vector<double> r = centered(problem.y, mean);
  double best = 0.0;
  for (std::size_t j = 0; j < x.cols; ++j) best = std::max(best, std::abs(dot(x.column(j), r.data(), x.rows)));
  return 2.0 * best;
}

bool KktReport::passed() const {
  return std::all_of(feature_ok.begin(), feature_ok.end(), [](bool ok) { return ok; });
}

KktReport kkt_check(const LassoProblem& problem, const LassoFit& fit, double tol) {
  const auto& x = problem.x;
  std::vector<double> r(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double fitted = fit.beta0;
    for (std::size_t j = 0; j < x.cols; ++j) fitted += fit.beta[j] * x.at(i, j);
    r[i] = problem.y[i] - fitted;
  }
  KktReport report;
  report.feature_ok.resize(x.cols);
  for (std::size_t j = 0; j < x.cols; ++j) {
    const double g = 2.0 * dot(x.column(j), r.data(), x.rows);
    double violation;
    if (fit.beta[j] == 0.0) violation = std::max(0.0, std::abs(g) - problem.lambda);
    else violation = std::abs(g - problem.lambda * (fit.beta[j] > 0.0 ? 1.0 : -1.0));
    report.feature_ok[j] = violation <= tol;
    report.max_violation = std::max(report.max_violation, violation);
  }
  return report;
}

double lambda_max_ovr(const DesignMatrix& x, const std::vector<int>& targets, std::size_t num_classes) {
  double best = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    LassoProblem problem{x, indicator(targets, static_cast<int>(c)), 0.0};
    best = std::max(best, lambda_max(problem));
  }
  return best;
}

std::vector<std::size_t> select_features_ovr(const DesignMatrix& x, const std::vector<int>& targets,
                                             std::size_t num_classes, double lambda, double tol,
                                             std::size_t max_sweeps) {
  if (num_classes < 2) throw ConfigError("select_features_ovr: need at least 2 classes");
  if (targets.size() != x.rows) throw ShapeError("select_features_ovr: target length != rows");
  std::set<std::size_t> support;
  LassoProblem problem{x, {}, lambda};
  for (std::size_t c = 0; c < num_classes; ++c) {
    problem.y = indicator(targets, static_cast<int>(c));
    const LassoFit fit = lasso_fit(problem, tol, max_sweeps);
    for (std::size_t j = 0; j < fit.beta.size(); ++j)
      if (fit.beta[j] != 0.0) support.insert(j);
  }
  return {support.begin(), support.end()};
}

}  // namespace mogat

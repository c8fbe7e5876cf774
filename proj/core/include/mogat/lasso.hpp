#pragma once

#include <cstddef>
#include <vector>

namespace mogat {

// Column-major design so that coordinate updates stream a contiguous column.
struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // data[c * rows + r]

  double at(std::size_t r, std::size_t c) const { return data[c * rows + r]; }
  const double* column(std::size_t c) const { return data.data() + c * rows; }

  /// Builds from a row-major (rows x cols) grid.
  static DesignMatrix from_row_major(const std::vector<double>& values, std::size_t rows, std::size_t cols);
};

/// minimize  sum_i (y_i - b0 - sum_j b_j x_ij)^2 + lambda * sum_j |b_j|
/// (no 1/(2n) scaling, so the coordinate soft-threshold level is lambda/2).
struct LassoProblem {
  DesignMatrix x;
  std::vector<double> y;
  double lambda = 0.0;

  void validate() const;
};

struct LassoFit {
  double beta0 = 0.0;
  std::vector<double> beta;
  std::vector<double> objective_trace;  // objective after each sweep
  std::size_t sweeps = 0;
  bool converged = false;
};

struct KktReport {
  double max_violation = 0.0;
  std::vector<bool> feature_ok;

  bool passed() const;
};

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

LassoFit lasso_fit(const LassoProblem& problem, double tol = 1e-8, std::size_t max_sweeps = 10000);

/// Smallest lambda whose solution is identically zero: 2 max_j |x_j' (y - mean y)|.
double lambda_max(const LassoProblem& problem);

/// Objective value at (beta0, beta), evaluated directly from the definition.
double lasso_objective(const LassoProblem& problem, double beta0, const std::vector<double>& beta);

KktReport kkt_check(const LassoProblem& problem, const LassoFit& fit, double tol);

/// One-vs-rest selection: for every class fit the centered indicator and
/// return the sorted union of nonzero supports. `x` should be standardized.
std::vector<std::size_t> select_features_ovr(const DesignMatrix& x, const std::vector<int>& targets,
                                             std::size_t num_classes, double lambda, double tol = 1e-8,
                                             std::size_t max_sweeps = 10000);

/// max over classes of lambda_max for the one-vs-rest indicator targets.
double lambda_max_ovr(const DesignMatrix& x, const std::vector<int>& targets, std::size_t num_classes);

}  // namespace mogat

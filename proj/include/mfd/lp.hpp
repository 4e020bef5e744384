#pragma once

#include <Eigen/Dense>

namespace mfd {

enum class LpStatus { Optimal, Infeasible, NumericalError };

struct LpOptions {
  double lpTol = 1e-10;    // relative equality residual
  double feasTol = 1e-8;   // phase-1 objective threshold
  double pivotTol = 1e-11;
  long maxPivots = 0;      // 0 picks 50 * (rows + columns)
};

struct LpResult {
  LpStatus status = LpStatus::NumericalError;
  Eigen::VectorXd weights;
  double objective = 0.0;
  double residual = 0.0;   // max-norm of C w - b relative to (1 + |b|) after row scaling
  long pivots = 0;
};

// minimize sum(w) subject to C w = b, w >= 0. Two-phase dense tableau simplex with Bland's rule.
LpResult simplex_min_sum(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, const LpOptions& options = {});

}  // namespace mfd

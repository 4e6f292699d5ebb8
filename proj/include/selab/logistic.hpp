#pragma once

#include <cmath>
#include <vector>

namespace selab {

struct FitMeta {
  int iterations = 0;
  double grad_max_norm = 0.0;
  bool converged = false;
};

struct LogisticFitOptions {
  double ridge = 1e-6;  // L2 penalty on non-intercept weights
  double tol = 1e-8;    // max-abs gradient at convergence
  int max_iter = 100;
};

struct LogisticFit {
  std::vector<double> beta;  // beta[0] is the intercept
  FitMeta meta;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Newton/IRLS on grouped binomial data: row i has feature vector rows[i]
// (intercept excluded), `successes[i]` positive labels out of `trials[i]`.
// Duplicate feature rows should be pre-aggregated by the caller; the fit is
// identical to the per-record one and much cheaper.
LogisticFit fit_logistic(const std::vector<std::vector<double>>& rows,
                         const std::vector<double>& successes,
                         const std::vector<double>& trials,
                         const LogisticFitOptions& opts = {});

}  // namespace selab

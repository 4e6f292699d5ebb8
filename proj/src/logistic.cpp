#include "selab/logistic.hpp"

#include <algorithm>
#include <stdexcept>

#include "selab/util.hpp"

namespace selab {

namespace {

// Cholesky solve of A x = b for symmetric positive definite A (dense,
// row-major, p x p). A is destroyed. The ridge term keeps A strictly
// positive definite for every fit we run.
std::vector<double> solve_spd(std::vector<double>& a, std::vector<double> b, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > 0.0)) throw std::runtime_error("logistic fit: normal matrix not positive definite");
    d = std::sqrt(d);
    a[j * p + j] = d;
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = v / d;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {  // L y = b
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * p + k] * b[k];
    b[i] = v / a[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {  // L^T x = y
    double v = b[ii];
    for (std::size_t k = ii + 1; k < p; ++k) v -= a[k * p + ii] * b[k];
    b[ii] = v / a[ii * p + ii];
  }
  return b;
}

}  // namespace

LogisticFit fit_logistic(const std::vector<std::vector<double>>& rows,
                         const std::vector<double>& successes,
                         const std::vector<double>& trials,
                         const LogisticFitOptions& opts) {
  const std::size_t n = rows.size();
  if (n == 0) throw ValidationError("logistic fit: no rows");
  if (successes.size() != n || trials.size() != n) {
    throw ValidationError("logistic fit: rows/labels size mismatch");
  }
  const std::size_t k = rows[0].size();
  const std::size_t p = k + 1;  // + intercept

  LogisticFit fit;
  fit.beta.assign(p, 0.0);

  std::vector<double> hess(p * p);
  std::vector<double> grad(p);
  std::vector<double> xi(p, 1.0);

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    std::fill(hess.begin(), hess.end(), 0.0);
    std::fill(grad.begin(), grad.end(), 0.0);

    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double>& x = rows[i];
      double eta = fit.beta[0];
      for (std::size_t j = 0; j < k; ++j) eta += fit.beta[j + 1] * x[j];
      const double mu = sigmoid(eta);
      const double w = std::max(trials[i] * mu * (1.0 - mu), 1e-12);
      const double resid = successes[i] - trials[i] * mu;

      xi[0] = 1.0;
      for (std::size_t j = 0; j < k; ++j) xi[j + 1] = x[j];
      for (std::size_t a = 0; a < p; ++a) {
        grad[a] += resid * xi[a];
        for (std::size_t b = a; b < p; ++b) hess[a * p + b] += w * xi[a] * xi[b];
      }
    }
    for (std::size_t a = 1; a < p; ++a) {
      grad[a] -= opts.ridge * fit.beta[a];
      hess[a * p + a] += opts.ridge;
    }

    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::fabs(g));
    fit.meta.iterations = iter;
    fit.meta.grad_max_norm = gmax;
    if (gmax < opts.tol) {
      fit.meta.converged = true;
      return fit;
    }
    if (iter == opts.max_iter) break;  // report non-convergence, never hide it

    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) hess[a * p + b] = hess[b * p + a];
    const std::vector<double> step = solve_spd(hess, grad, p);
    for (std::size_t a = 0; a < p; ++a) fit.beta[a] += step[a];
  }

  fit.meta.converged = false;
  return fit;
}

}  // namespace selab

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "acll/errors.hpp"

namespace acll {

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

}  // namespace detail

struct GpHyper {
  double length_scale = 0.2;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

/// Hyperparameters used throughout the dual search: fixed length scale on the
/// unit cube, signal variance tracking the spread of the observed targets.
inline GpHyper default_gp_hyper(const std::vector<double>& values) {
  GpHyper hyper;
  if (!values.empty()) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    hyper.signal_variance = std::max(var, 1e-6);
  }
  return hyper;
}

/// Gaussian-process regressor with a squared-exponential kernel and a prior
/// mean equal to the mean of the targets. Immutable once fitted.
struct GpModel {
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  GpHyper hyper;
  double prior_mean = 0.0;
  std::vector<double> chol;   // lower factor of K + noise*I, row-major
  std::vector<double> alpha;  // (K + noise*I)^{-1} (targets - prior_mean)

  std::size_t n() const { return inputs.size(); }
  std::size_t dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

  double kernel(const std::vector<double>& a, const std::vector<double>& b) const {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      sq += d * d;
    }
    return hyper.signal_variance *
           std::exp(-sq / (2.0 * hyper.length_scale * hyper.length_scale));
  }
};

namespace detail {

// In-place Cholesky of a symmetric matrix stored row-major; false if any
// pivot is non-positive.
inline bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
    for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
  }
  return true;
}

inline void solve_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
    x[i] = s / l[i * n + i];
  }
}

inline void solve_upper_from_lower(const std::vector<double>& l, std::size_t n,
                                   std::vector<double>& x) {
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k];
    x[ii] = s / l[ii * n + ii];
  }
}

}  // namespace detail

/// Fits the GP. Factorization retries with jitter 1e-10, 1e-9, ..., 1e-6 on
/// the diagonal before giving up.
inline GpModel fit_gp(const std::vector<std::vector<double>>& points,
                      const std::vector<double>& values, const GpHyper& hyper) {
  if (points.empty()) throw InvalidSpecError("fit_gp: need at least one point");
  if (points.size() != values.size())
    throw ShapeError("fit_gp: point and value counts differ");
  const std::size_t d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw ShapeError("fit_gp: inconsistent point dimensions");
    for (double c : p)
      if (!(c >= 0.0 && c <= 1.0))
        throw InvalidSpecError("fit_gp: points must lie in the unit cube");
  }
  if (!(hyper.length_scale > 0.0) || !(hyper.signal_variance > 0.0) ||
      !(hyper.noise_variance >= 0.0))
    throw InvalidSpecError("fit_gp: hyperparameters out of range");

  GpModel model;
  model.inputs = points;
  model.targets = values;
  model.hyper = hyper;
  double mean = 0.0;
  for (double v : values) mean += v;
  model.prior_mean = mean / static_cast<double>(values.size());

  const std::size_t n = points.size();
  std::vector<double> base(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) base[i * n + j] = model.kernel(points[i], points[j]);
  for (std::size_t i = 0; i < n; ++i) base[i * n + i] += hyper.noise_variance;

  double jitter = 0.0;
  for (;;) {
    model.chol = base;
    if (jitter > 0.0)
      for (std::size_t i = 0; i < n; ++i) model.chol[i * n + i] += jitter;
    if (detail::cholesky(model.chol, n)) break;
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-6)
      throw ConditioningError("fit_gp: kernel matrix not positive definite at maximum jitter");
  }

  model.alpha.resize(n);
  for (std::size_t i = 0; i < n; ++i) model.alpha[i] = values[i] - model.prior_mean;
  detail::solve_lower(model.chol, n, model.alpha);
  detail::solve_upper_from_lower(model.chol, n, model.alpha);
  return model;
}

/// Posterior mean and (latent, noise-free) variance at x. Variance is clamped
/// at zero from below.
inline std::pair<double, double> posterior(const GpModel& model, const std::vector<double>& x) {
  if (x.size() != model.dim()) throw ShapeError("posterior: query dimension mismatch");
  const std::size_t n = model.n();
  std::vector<double> k_star(n);
  for (std::size_t i = 0; i < n; ++i) k_star[i] = model.kernel(model.inputs[i], x);
  double mean = model.prior_mean;
  for (std::size_t i = 0; i < n; ++i) mean += k_star[i] * model.alpha[i];
  std::vector<double> v = k_star;
  detail::solve_lower(model.chol, n, v);
  double var = model.kernel(x, x);
  for (std::size_t i = 0; i < n; ++i) var -= v[i] * v[i];
  if (var < 0.0) var = 0.0;
  return {mean, var};
}

/// Expected improvement below `best_value` for a minimization problem.
inline double expected_improvement(const GpModel& model, const std::vector<double>& x,
                                   double best_value) {
  const auto [mu, var] = posterior(model, x);
  const double gap = best_value - mu;
  if (var <= 0.0) return gap > 0.0 ? gap : 0.0;
  const double sigma = std::sqrt(var);
  const double z = gap / sigma;
  const double ei = gap * detail::normal_cdf(z) + sigma * detail::normal_pdf(z);
  return ei > 0.0 ? ei : 0.0;
}

}  // namespace acll

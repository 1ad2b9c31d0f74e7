#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace stlmine {

/// Gaussian-process regressor with a squared-exponential kernel, intended
/// for inputs normalized to the unit box. Targets are standardized
/// internally so the prior mean matches the data. Refit on every call to
/// fit(); predictions before the first fit return the prior.
class GaussianProcess {
 public:
  explicit GaussianProcess(double length_scale = 0.2, double signal_var = 1.0,
                           double noise_var = 1e-4);

  void fit(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys);

  /// Posterior (mean, stddev) at one point.
  std::pair<double, double> predict(const std::vector<double>& x) const;

  std::size_t size() const { return xs_.size(); }

 private:
  double kernel(const std::vector<double>& a, const std::vector<double>& b) const;

  double length_scale_;
  double signal_var_;
  double noise_var_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  std::vector<std::vector<double>> xs_;
  std::vector<double> alpha_;            // K^-1 y in standardized units
  std::vector<std::vector<double>> chol_;  // lower Cholesky factor of K
};

}  // namespace stlmine

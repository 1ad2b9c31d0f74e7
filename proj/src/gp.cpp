#include "stlmine/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace stlmine {

GaussianProcess::GaussianProcess(double length_scale, double signal_var,
                                 double noise_var)
    : length_scale_(length_scale), signal_var_(signal_var), noise_var_(noise_var) {
  if (length_scale <= 0 || signal_var <= 0 || noise_var < 0)
    throw std::invalid_argument("gp hyperparameters must be positive");
}

double GaussianProcess::kernel(const std::vector<double>& a,
                               const std::vector<double>& b) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    d2 += d * d;
  }
  return signal_var_ * std::exp(-d2 / (2.0 * length_scale_ * length_scale_));
}

void GaussianProcess::fit(const std::vector<std::vector<double>>& xs,
                          const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.empty())
    throw std::invalid_argument("gp fit needs matching nonempty samples");
  std::size_t n = xs.size();
  xs_ = xs;

  y_mean_ = 0.0;
  for (double y : ys) y_mean_ += y;
  y_mean_ /= static_cast<double>(n);
  double var = 0.0;
  for (double y : ys) var += (y - y_mean_) * (y - y_mean_);
  y_scale_ = std::sqrt(var / static_cast<double>(n));
  if (y_scale_ < 1e-12) y_scale_ = 1.0;

  Eigen::MatrixXd k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = kernel(xs[i], xs[j]);
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  k.diagonal().array() += noise_var_ + 1e-10;

  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i)
    y(static_cast<Eigen::Index>(i)) = (ys[i] - y_mean_) / y_scale_;

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gp kernel matrix is not positive definite");
  Eigen::VectorXd alpha = llt.solve(y);
  Eigen::MatrixXd l = llt.matrixL();

  alpha_.assign(alpha.data(), alpha.data() + n);
  chol_.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      chol_[i][j] = l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

std::pair<double, double> GaussianProcess::predict(const std::vector<double>& x) const {
  if (xs_.empty()) return {0.0, std::sqrt(signal_var_)};
  std::size_t n = xs_.size();
  std::vector<double> kx(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    kx[i] = kernel(xs_[i], x);
    mean += kx[i] * alpha_[i];
  }
  // v = L^-1 k_x by forward substitution; var = k(x,x) - v.v
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = kx[i];
    for (std::size_t j = 0; j < i; ++j) s -= chol_[i][j] * v[j];
    v[i] = s / chol_[i][i];
  }
  double var = kernel(x, x);
  for (std::size_t i = 0; i < n; ++i) var -= v[i] * v[i];
  if (var < 0) var = 0;
  return {y_mean_ + y_scale_ * mean, y_scale_ * std::sqrt(var)};
}

}  // namespace stlmine

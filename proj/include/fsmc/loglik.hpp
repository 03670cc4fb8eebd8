#pragma once

#include <span>
#include <utility>
#include <vector>

namespace fsmc {

// Log-likelihood over the flat coordinate vector; the sampler only ever sees
// this interface.  Gradients are in the flat l2 coordinates.
class LogLikelihood {
 public:
  virtual ~LogLikelihood() = default;

  virtual double value(std::span<const double> params) const = 0;

  virtual bool has_gradient() const { return false; }
  virtual std::vector<double> gradient(std::span<const double> params) const;

  // value and gradient together; overridden where one pass can serve both
  virtual std::pair<double, std::vector<double>> value_and_gradient(
      std::span<const double> params) const;
};

// ell identically 0: the posterior is the prior.
class ZeroLogLikelihood final : public LogLikelihood {
 public:
  explicit ZeroLogLikelihood(std::size_t dim) : dim_(dim) {}
  double value(std::span<const double>) const override { return 0.0; }
  bool has_gradient() const override { return true; }
  std::vector<double> gradient(std::span<const double>) const override {
    return std::vector<double>(dim_, 0.0);
  }

 private:
  std::size_t dim_;
};

// Diagonal Gaussian toy target ell(u) = -0.5 ||u - mean||^2 / s^2; conjugate
// to the prior, so posterior moments have closed forms for tests.
class GaussianToyLogLikelihood final : public LogLikelihood {
 public:
  GaussianToyLogLikelihood(std::vector<double> mean, double s) : mean_(std::move(mean)), s_(s) {}
  double value(std::span<const double> params) const override;
  bool has_gradient() const override { return true; }
  std::vector<double> gradient(std::span<const double> params) const override;

 private:
  std::vector<double> mean_;
  double s_;
};

}  // namespace fsmc

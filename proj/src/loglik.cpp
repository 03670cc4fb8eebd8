#include "fsmc/loglik.hpp"

#include "fsmc/errors.hpp"

namespace fsmc {

std::vector<double> LogLikelihood::gradient(std::span<const double>) const {
  throw ConfigError("this log-likelihood does not provide a gradient");
}

std::pair<double, std::vector<double>> LogLikelihood::value_and_gradient(
    std::span<const double> params) const {
  return {value(params), gradient(params)};
}

double GaussianToyLogLikelihood::value(std::span<const double> params) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double r = params[i] - mean_[i];
    acc += r * r;
  }
  return -0.5 * acc / (s_ * s_);
}

std::vector<double> GaussianToyLogLikelihood::gradient(std::span<const double> params) const {
  std::vector<double> g(mean_.size());
  for (std::size_t i = 0; i < mean_.size(); ++i) g[i] = -(params[i] - mean_[i]) / (s_ * s_);
  return g;
}

}  // namespace fsmc

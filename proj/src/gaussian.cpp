#include "fsmc/gaussian.hpp"

#include <cmath>
#include <string>

#include "fsmc/errors.hpp"

namespace fsmc {

DiagonalGaussian::DiagonalGaussian(std::vector<double> variances)
    : variances_(std::move(variances)) {
  if (variances_.empty()) throw ConfigError("DiagonalGaussian: empty variance sequence");
  stddevs_.reserve(variances_.size());
  for (std::size_t i = 0; i < variances_.size(); ++i) {
    const double v = variances_[i];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("DiagonalGaussian: variance " + std::to_string(i) +
                        " must be finite and strictly positive");
    }
    trace_ += v;
    stddevs_.push_back(std::sqrt(v));
  }
  if (!std::isfinite(trace_)) throw ConfigError("DiagonalGaussian: trace not finite");
}

std::vector<double> DiagonalGaussian::sample(Rng& rng) const {
  std::vector<double> out(variances_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stddevs_[i] * rng.normal();
  return out;
}

}  // namespace fsmc

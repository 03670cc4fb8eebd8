#pragma once

#include <vector>

#include "fsmc/rng.hpp"

namespace fsmc {

// Centered Gaussian measure with diagonal covariance.  All variances must be
// strictly positive; the trace (sum of variances) is computed and cached at
// construction.
class DiagonalGaussian {
 public:
  explicit DiagonalGaussian(std::vector<double> variances);

  int dimension() const { return static_cast<int>(variances_.size()); }
  double variance(int i) const { return variances_[i]; }
  double stddev(int i) const { return stddevs_[i]; }
  double trace() const { return trace_; }
  const std::vector<double>& variances() const { return variances_; }
  const std::vector<double>& stddevs() const { return stddevs_; }

  // Independent draws, coordinate i with variance lambda_i^2.
  std::vector<double> sample(Rng& rng) const;

 private:
  std::vector<double> variances_;
  std::vector<double> stddevs_;
  double trace_ = 0.0;
};

}  // namespace fsmc

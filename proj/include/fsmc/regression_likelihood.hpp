#pragma once

#include <memory>
#include <vector>

#include "fsmc/evaluator.hpp"
#include "fsmc/loglik.hpp"

namespace fsmc {

struct RegressionRecord {
  std::vector<double> x;
  double y = 0.0;
};

struct RegressionDataset {
  std::vector<RegressionRecord> records;
  double noise_std = 0.01;
};

// Gaussian observation likelihood -sum (y - u(x))^2 / (2 sigma_obs^2); the
// additive normalisation constant is dropped, as everywhere else.
class RegressionLogLikelihood final : public LogLikelihood {
 public:
  RegressionLogLikelihood(RegressionDataset dataset,
                          std::shared_ptr<const FunctionEvaluator> evaluator);

  double value(std::span<const double> params) const override;
  bool has_gradient() const override { return true; }
  std::vector<double> gradient(std::span<const double> params) const override;
  std::pair<double, std::vector<double>> value_and_gradient(
      std::span<const double> params) const override;

 private:
  double assemble(std::span<const double> params, std::vector<double>* grad) const;

  RegressionDataset dataset_;
  std::shared_ptr<const FunctionEvaluator> evaluator_;
  std::vector<std::vector<double>> points_;
};

}  // namespace fsmc

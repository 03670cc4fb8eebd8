#include "fsmc/regression_likelihood.hpp"

#include "fsmc/errors.hpp"

namespace fsmc {

RegressionLogLikelihood::RegressionLogLikelihood(
    RegressionDataset dataset, std::shared_ptr<const FunctionEvaluator> evaluator)
    : dataset_(std::move(dataset)), evaluator_(std::move(evaluator)) {
  if (!(dataset_.noise_std > 0.0)) {
    throw ConfigError("RegressionDataset: noise std must be positive");
  }
  points_.reserve(dataset_.records.size());
  for (const auto& rec : dataset_.records) points_.push_back(rec.x);
}

double RegressionLogLikelihood::assemble(std::span<const double> params,
                                         std::vector<double>* grad) const {
  const double inv_var = 1.0 / (dataset_.noise_std * dataset_.noise_std);
  std::vector<double> u;
  auto cache = grad ? evaluator_->make_cache() : nullptr;
  evaluator_->evaluate_batch(params, points_, u, cache.get());

  double loglik = 0.0;
  std::vector<double> coeff;
  if (grad) coeff.assign(points_.size(), 0.0);
  for (std::size_t t = 0; t < points_.size(); ++t) {
    const double r = dataset_.records[t].y - u[t];
    loglik -= 0.5 * r * r * inv_var;
    if (grad) coeff[t] = r * inv_var;
  }
  if (grad) {
    grad->assign(evaluator_->param_count(), 0.0);
    evaluator_->accumulate_param_gradient(params, points_, coeff, *grad, cache.get());
  }
  return loglik;
}

double RegressionLogLikelihood::value(std::span<const double> params) const {
  return assemble(params, nullptr);
}

std::vector<double> RegressionLogLikelihood::gradient(std::span<const double> params) const {
  std::vector<double> grad;
  assemble(params, &grad);
  return grad;
}

std::pair<double, std::vector<double>> RegressionLogLikelihood::value_and_gradient(
    std::span<const double> params) const {
  std::vector<double> grad;
  const double v = assemble(params, &grad);
  return {v, std::move(grad)};
}

}  // namespace fsmc

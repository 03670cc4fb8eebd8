#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fsmc/evaluator.hpp"
#include "fsmc/loglik.hpp"
#include "fsmc/neural_net.hpp"
#include "fsmc/quadrature.hpp"

namespace fsmc {

// deterministic state dynamics: (x, a) -> x', actions indexed 1..M
using TransitionFn = std::function<std::vector<double>(std::span<const double>, int)>;

struct ActionRecord {
  std::vector<double> state;
  int action = 0;  // 1..M
};

// state-action pairs plus the transition map needed to evaluate the value
// function at every one-step successor
struct ActionDataset {
  std::vector<ActionRecord> records;
  int action_count = 0;
  std::vector<std::array<double, 2>> state_box;
  double sigma = 0.1;             // action-noise level used when generating
  std::vector<int> action_labels; // original labels, e.g. {-1, 0, 1}
  TransitionFn transition;

  void validate() const;  // actions in range, states finite and inside the box
};

// --- single-observation probability and gradient --------------------------

// P(argmax_j (U_j) = best) for U_j ~ N(v_j, sigma^2) independent, evaluated
// as a Gauss-Hermite sum over the integrand pdf * prod cdf, accumulated in
// log domain.  best is 1-based; labels are permuted internally so the best
// action leads.
double action_log_prob(std::span<const double> v, int best, double sigma,
                       const QuadratureRule& quad);
double action_prob(std::span<const double> v, int best, double sigma, const QuadratureRule& quad);

// dp/dv_k for k = 1..M.  The best component integrates the tilted integrand;
// the others use the product-of-Gaussians reduction with its own quadrature
// substitution.
std::vector<double> action_prob_grad(std::span<const double> v, int best, double sigma,
                                     const QuadratureRule& quad);

// pre-simplification route for the k != best components (two pdf factors
// under one integral); kept as an independent cross-check of the reduction
std::vector<double> action_prob_grad_presimplified(std::span<const double> v, int best,
                                                   double sigma, const QuadratureRule& quad);

// grad(log p) = grad(p)/p without forming p or grad(p) in the linear domain,
// so extreme observations cannot underflow; also returns log p.
struct ActionLogProbGrad {
  double log_prob = 0.0;
  std::vector<double> dlog_dv;  // before stabilization
};
ActionLogProbGrad action_log_prob_grad(std::span<const double> v, int best, double sigma,
                                       const QuadratureRule& quad);

// --- gradient stabilization ------------------------------------------------

// The analytic component sum is 0 by translation invariance; quadrature
// error breaks that, so the gradient is re-centered.
enum class GradStabilization {
  MEAN,         // subtract the arithmetic mean: exact zero sum
  SUM_LITERAL,  // subtract the full component sum, as printed in the source
                // derivation; leaves a residual (1-M) epsilon
  NONE
};

std::vector<double> stabilize_grad(std::span<const double> grad, GradStabilization mode);

// --- dataset likelihood ------------------------------------------------------

struct ActionLikelihoodConfig {
  double sigma = 0.1;
  int quadrature_order = 64;
  Saturation saturation;  // disabled by default
  GradStabilization stabilization = GradStabilization::MEAN;
};

// ell(y | theta) = sum_t log p(a_t | v_t, sigma) with v_t[k] the (optionally
// saturated) value at the successor T(x_t, k).  Summation order is fixed
// (ascending t) for bit-reproducibility.
class ActionLogLikelihood final : public LogLikelihood {
 public:
  ActionLogLikelihood(ActionDataset dataset, std::shared_ptr<const FunctionEvaluator> evaluator,
                      ActionLikelihoodConfig config);

  double value(std::span<const double> params) const override;
  bool has_gradient() const override { return true; }
  std::vector<double> gradient(std::span<const double> params) const override;
  std::pair<double, std::vector<double>> value_and_gradient(
      std::span<const double> params) const override;

  const ActionDataset& dataset() const { return dataset_; }
  const ActionLikelihoodConfig& config() const { return config_; }

 private:
  double assemble(std::span<const double> params, std::vector<double>* grad) const;

  ActionDataset dataset_;
  std::shared_ptr<const FunctionEvaluator> evaluator_;
  ActionLikelihoodConfig config_;
  QuadratureRule quad_;
  std::vector<std::vector<double>> successors_;  // t-major, M per record
};

}  // namespace fsmc

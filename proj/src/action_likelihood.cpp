#include "fsmc/action_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fsmc/errors.hpp"
#include "fsmc/special_functions.hpp"

namespace fsmc {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
const double kLogPi = std::log(std::numbers::pi);

void check_inputs(std::span<const double> v, int best, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("action_prob: sigma must be positive");
  if (best < 1 || best > static_cast<int>(v.size())) {
    throw ConfigError("action_prob: best action out of range");
  }
  for (double vi : v) {
    if (!std::isfinite(vi)) throw InputError("action_prob: non-finite value entry");
  }
}

struct LogWeights {
  std::vector<double> logw;
  explicit LogWeights(const QuadratureRule& quad) {
    logw.resize(quad.weights.size());
    for (std::size_t k = 0; k < logw.size(); ++k) logw[k] = std::log(quad.weights[k]);
  }
};

// log p and the shifted sums S0 = sum exp(term - m), S1 = sum s exp(term - m)
// over quadrature nodes, with term_k = log w_k + sum_{j != best} log Phi(...).
struct ProbSums {
  double log_prob;
  double s0;
  double s1;
  double shift;
};

ProbSums prob_sums(std::span<const double> v, int best, double sigma, const QuadratureRule& quad,
                   const std::vector<double>& logw) {
  const int M = static_cast<int>(v.size());
  const double vb = v[best - 1];
  const double root2sig = std::numbers::sqrt2 * sigma;

  const int n = quad.order;
  std::vector<double> term(n);
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double t = vb + root2sig * quad.nodes[k];
    double acc = logw[k];
    for (int j = 0; j < M; ++j) {
      if (j == best - 1) continue;
      acc += log_std_normal_cdf((t - v[j]) / sigma);
    }
    term[k] = acc;
    m = std::max(m, acc);
  }
  double s0 = 0.0, s1 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double e = std::exp(term[k] - m);
    s0 += e;
    s1 += quad.nodes[k] * e;
  }
  return {-0.5 * kLogPi + m + std::log(s0), s0, s1, m};
}

// log of the Eq-for-k!=best integral: quadrature centered at (v_b + v_k)/2
// with width sigma/sqrt(2); returns log sum_q w_q prod_{j not in {b,k}} Phi.
double log_pair_integral(std::span<const double> v, int best, int k, double sigma,
                         const QuadratureRule& quad, const std::vector<double>& logw) {
  const int M = static_cast<int>(v.size());
  const double mid = 0.5 * (v[best - 1] + v[k - 1]);
  const int n = quad.order;
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> term(n);
  for (int q = 0; q < n; ++q) {
    const double t = mid + sigma * quad.nodes[q];
    double acc = logw[q];
    for (int j = 0; j < M; ++j) {
      if (j == best - 1 || j == k - 1) continue;
      acc += log_std_normal_cdf((t - v[j]) / sigma);
    }
    term[q] = acc;
    m = std::max(m, acc);
  }
  double s = 0.0;
  for (int q = 0; q < n; ++q) s += std::exp(term[q] - m);
  return m + std::log(s);
}

ActionLogProbGrad log_prob_grad_impl(std::span<const double> v, int best, double sigma,
                                     const QuadratureRule& quad, const std::vector<double>& logw) {
  const int M = static_cast<int>(v.size());
  const auto sums = prob_sums(v, best, sigma, quad, logw);

  ActionLogProbGrad out;
  out.log_prob = sums.log_prob;
  out.dlog_dv.assign(M, 0.0);
  out.dlog_dv[best - 1] = std::numbers::sqrt2 / sigma * (sums.s1 / sums.s0);

  for (int k = 1; k <= M; ++k) {
    if (k == best) continue;
    const double u = (v[best - 1] - v[k - 1]) / (std::numbers::sqrt2 * sigma);
    const double log_phi = -0.5 * u * u - kLogSqrt2Pi;
    const double log_abs =
        -std::log(sigma) - kLogSqrt2Pi + log_phi + log_pair_integral(v, best, k, sigma, quad, logw);
    out.dlog_dv[k - 1] = -std::exp(log_abs - sums.log_prob);
  }
  return out;
}

}  // namespace

double action_log_prob(std::span<const double> v, int best, double sigma,
                       const QuadratureRule& quad) {
  check_inputs(v, best, sigma);
  LogWeights lw(quad);
  return prob_sums(v, best, sigma, quad, lw.logw).log_prob;
}

double action_prob(std::span<const double> v, int best, double sigma, const QuadratureRule& quad) {
  return std::exp(action_log_prob(v, best, sigma, quad));
}

ActionLogProbGrad action_log_prob_grad(std::span<const double> v, int best, double sigma,
                                       const QuadratureRule& quad) {
  check_inputs(v, best, sigma);
  LogWeights lw(quad);
  return log_prob_grad_impl(v, best, sigma, quad, lw.logw);
}

std::vector<double> action_prob_grad(std::span<const double> v, int best, double sigma,
                                     const QuadratureRule& quad) {
  const auto lg = action_log_prob_grad(v, best, sigma, quad);
  const double p = std::exp(lg.log_prob);
  std::vector<double> grad(lg.dlog_dv.size());
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = p * lg.dlog_dv[k];
  return grad;
}

std::vector<double> action_prob_grad_presimplified(std::span<const double> v, int best,
                                                   double sigma, const QuadratureRule& quad) {
  check_inputs(v, best, sigma);
  LogWeights lw(quad);
  const int M = static_cast<int>(v.size());
  const auto sums = prob_sums(v, best, sigma, quad, lw.logw);
  const double p = std::exp(sums.log_prob);

  std::vector<double> grad(M, 0.0);
  grad[best - 1] = p * (std::numbers::sqrt2 / sigma * (sums.s1 / sums.s0));

  const double vb = v[best - 1];
  const double root2sig = std::numbers::sqrt2 * sigma;
  for (int k = 1; k <= M; ++k) {
    if (k == best) continue;
    // both pdf factors kept under the same best-centered substitution
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> term(quad.order);
    for (int q = 0; q < quad.order; ++q) {
      const double t = vb + root2sig * quad.nodes[q];
      const double u = (t - v[k - 1]) / sigma;
      double acc = lw.logw[q] - 0.5 * u * u - kLogSqrt2Pi;
      for (int j = 0; j < M; ++j) {
        if (j == best - 1 || j == k - 1) continue;
        acc += log_std_normal_cdf((t - v[j]) / sigma);
      }
      term[q] = acc;
      m = std::max(m, acc);
    }
    double s = 0.0;
    for (int q = 0; q < quad.order; ++q) s += std::exp(term[q] - m);
    grad[k - 1] = -std::numbers::sqrt2 / (sigma * std::sqrt(2.0 * std::numbers::pi)) *
                  std::exp(m) * s;
  }
  return grad;
}

std::vector<double> stabilize_grad(std::span<const double> grad, GradStabilization mode) {
  std::vector<double> out(grad.begin(), grad.end());
  if (mode == GradStabilization::NONE || out.empty()) return out;
  double total = 0.0;
  for (double g : out) total += g;
  const double shift = (mode == GradStabilization::MEAN) ? total / out.size() : total;
  for (double& g : out) g -= shift;
  return out;
}

void ActionDataset::validate() const {
  if (action_count < 2) throw ConfigError("ActionDataset: need at least 2 actions");
  if (!transition) throw ConfigError("ActionDataset: transition map not set");
  if (records.empty()) throw ConfigError("ActionDataset: empty record list");
  for (const auto& rec : records) {
    if (rec.action < 1 || rec.action > action_count) {
      throw ConfigError("ActionDataset: action label out of range");
    }
    if (!state_box.empty() && rec.state.size() != state_box.size()) {
      throw ConfigError("ActionDataset: state dimension mismatch");
    }
    for (std::size_t d = 0; d < rec.state.size(); ++d) {
      if (!std::isfinite(rec.state[d])) throw ConfigError("ActionDataset: non-finite state");
      if (!state_box.empty()) {
        const double slack = 1e-12 * (state_box[d][1] - state_box[d][0]);
        if (rec.state[d] < state_box[d][0] - slack || rec.state[d] > state_box[d][1] + slack) {
          throw ConfigError("ActionDataset: state outside the declared box");
        }
      }
    }
  }
}

ActionLogLikelihood::ActionLogLikelihood(ActionDataset dataset,
                                         std::shared_ptr<const FunctionEvaluator> evaluator,
                                         ActionLikelihoodConfig config)
    : dataset_(std::move(dataset)), evaluator_(std::move(evaluator)), config_(config) {
  dataset_.validate();
  if (!(config_.sigma > 0.0)) throw ConfigError("ActionLikelihoodConfig: sigma must be positive");
  quad_ = gauss_hermite(config_.quadrature_order);
  successors_.reserve(dataset_.records.size() * dataset_.action_count);
  for (const auto& rec : dataset_.records) {
    for (int a = 1; a <= dataset_.action_count; ++a) {
      successors_.push_back(dataset_.transition(rec.state, a));
    }
  }
}

double ActionLogLikelihood::assemble(std::span<const double> params,
                                     std::vector<double>* grad) const {
  const int M = dataset_.action_count;
  const std::size_t T = dataset_.records.size();
  LogWeights lw(quad_);

  std::vector<double> values;
  auto cache = grad ? evaluator_->make_cache() : nullptr;
  evaluator_->evaluate_batch(params, successors_, values, cache.get());

  std::vector<double> sat(values.size()), sprime(values.size());
  if (config_.saturation.enabled) {
    apply_saturation(config_.saturation, values, sat, sprime);
  } else {
    sat = values;
    std::fill(sprime.begin(), sprime.end(), 1.0);
  }

  std::vector<double> coeff;
  if (grad) coeff.assign(values.size(), 0.0);

  double loglik = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const std::span<const double> vt(sat.data() + t * M, static_cast<std::size_t>(M));
    const int best = dataset_.records[t].action;
    if (!grad) {
      loglik += prob_sums(vt, best, config_.sigma, quad_, lw.logw).log_prob;
      continue;
    }
    const auto lg = log_prob_grad_impl(vt, best, config_.sigma, quad_, lw.logw);
    loglik += lg.log_prob;
    const auto stabilized = stabilize_grad(lg.dlog_dv, config_.stabilization);
    for (int k = 0; k < M; ++k) {
      coeff[t * M + k] = stabilized[k] * sprime[t * M + k];
    }
  }

  if (grad) {
    grad->assign(evaluator_->param_count(), 0.0);
    evaluator_->accumulate_param_gradient(params, successors_, coeff, *grad, cache.get());
  }
  return loglik;
}

double ActionLogLikelihood::value(std::span<const double> params) const {
  return assemble(params, nullptr);
}

std::vector<double> ActionLogLikelihood::gradient(std::span<const double> params) const {
  std::vector<double> grad;
  assemble(params, &grad);
  return grad;
}

std::pair<double, std::vector<double>> ActionLogLikelihood::value_and_gradient(
    std::span<const double> params) const {
  std::vector<double> grad;
  const double v = assemble(params, &grad);
  return {v, std::move(grad)};
}

}  // namespace fsmc

#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "fsmc/neural_net.hpp"
#include "fsmc/prior_layout.hpp"

namespace fsmc {

// Optional map applied to the caller's input before the basis sum / network
// forward pass.  SIN_2D realises the (x1, x2, sin x1, sin x2) input
// augmentation; BOX_RESCALE maps a state box onto the unit cube.
class InputMap {
 public:
  enum class Kind { IDENTITY, SIN_2D, BOX_RESCALE };

  static InputMap identity() { return InputMap(Kind::IDENTITY, {}); }
  static InputMap sin2d() { return InputMap(Kind::SIN_2D, {}); }
  static InputMap box_rescale(std::vector<std::array<double, 2>> box) {
    return InputMap(Kind::BOX_RESCALE, std::move(box));
  }

  Kind kind() const { return kind_; }
  const std::vector<std::array<double, 2>>& box() const { return box_; }

  int output_dim(int input_dim) const;
  void apply(std::span<const double> x, std::vector<double>& out) const;

  bool operator==(const InputMap&) const = default;

 private:
  InputMap(Kind kind, std::vector<std::array<double, 2>> box)
      : kind_(kind), box_(std::move(box)) {}
  Kind kind_;
  std::vector<std::array<double, 2>> box_;
};

// Opaque per-batch scratch shared between a value pass and the gradient pass
// that follows it (networks keep their forward cache here).
struct EvalCache {
  virtual ~EvalCache() = default;
};

// Maps (parameter vector, x) to the function value; KL families realise
// u(x) = sum_i xi_i phi_i(x), network families the forward pass v(x).
class FunctionEvaluator {
 public:
  virtual ~FunctionEvaluator() = default;

  virtual std::size_t param_count() const = 0;
  virtual int domain_dim() const = 0;  // dimension of x before augmentation
  virtual bool linear_in_params() const = 0;

  virtual double evaluate(std::span<const double> params, std::span<const double> x) const = 0;

  virtual std::unique_ptr<EvalCache> make_cache() const { return nullptr; }

  virtual void evaluate_batch(std::span<const double> params,
                              const std::vector<std::vector<double>>& xs,
                              std::vector<double>& out, EvalCache* cache = nullptr) const;

  // jac: xs.size() x param_count, row-major
  virtual void param_jacobian(std::span<const double> params,
                              const std::vector<std::vector<double>>& xs,
                              std::vector<double>& jac) const = 0;

  // grad += sum_k coeff[k] d v(x_k)/d theta.  When cache comes from an
  // evaluate_batch call with the same (params, xs), the forward pass is
  // reused; one backward pass per data point.
  virtual void accumulate_param_gradient(std::span<const double> params,
                                         const std::vector<std::vector<double>>& xs,
                                         std::span<const double> coeff, std::span<double> grad,
                                         EvalCache* cache = nullptr) const = 0;
};

std::unique_ptr<FunctionEvaluator> make_evaluator(const PriorLayout& layout,
                                                  InputMap map = InputMap::identity());

}  // namespace fsmc

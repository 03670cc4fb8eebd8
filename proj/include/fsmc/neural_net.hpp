#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fsmc/prior_layout.hpp"

namespace fsmc {

enum class Activation { TANH, LIPSCHITZ_CUSTOM };

// Architecture of the feed-forward network.  Parameters live in a flat
// vector whose enumeration matches the TCNN PriorLayout: layers 1..n+1,
// biases first within a layer, then weights row-major.
struct NetworkShape {
  NetworkShape() = default;
  NetworkShape(int d, std::vector<int> widths)
      : input_dim(d), hidden_widths(std::move(widths)) {}

  int input_dim = 0;
  std::vector<int> hidden_widths;
  Activation activation = Activation::TANH;
  // only consulted for LIPSCHITZ_CUSTOM
  std::function<double(double)> custom_value;
  std::function<double(double)> custom_deriv;

  int layer_count() const { return static_cast<int>(hidden_widths.size()) + 1; }
  int width(int l) const {  // l = 0..n+1
    if (l == 0) return input_dim;
    if (l <= static_cast<int>(hidden_widths.size())) return hidden_widths[l - 1];
    return 1;
  }
  std::size_t param_count() const;
  std::size_t layer_offset(int l) const;  // l = 1..n+1
};

NetworkShape shape_from_layout(const PriorLayout& layout);

// Numeric spot-check of the activation contract: 1-Lipschitz and zeta(0)=0.
// Throws ConfigError when violated.
void check_activation_contract(const NetworkShape& shape);

// Per-layer activations and pre-activations for a batch of inputs, kept so
// the backward pass can reuse the forward pass.
struct ForwardCache {
  int npoints = 0;
  std::vector<double> inputs;    // npoints x input_dim
  std::vector<double> preacts;   // npoints x sum_l N(l)
  std::vector<double> acts;      // same shape; last layer entry unused
};

double nn_forward(const NetworkShape& shape, std::span<const double> params,
                  std::span<const double> x);

void nn_forward_batch(const NetworkShape& shape, std::span<const double> params,
                      const std::vector<std::vector<double>>& xs, std::vector<double>& out,
                      ForwardCache* cache = nullptr);

// Row k = gradient of v(x_k) with respect to every flat parameter;
// jac is npoints x param_count, row-major.
void nn_param_jacobian(const NetworkShape& shape, std::span<const double> params,
                       const std::vector<std::vector<double>>& xs, std::vector<double>& jac);

// grad += coeff * d v(x_k)/d theta for the cached point k.
void nn_backward_accumulate(const NetworkShape& shape, std::span<const double> params,
                            const ForwardCache& cache, int point_index, double coeff,
                            std::span<double> grad);

// Bounded squashing s(v) = c tanh(v/c) applied to value evaluations inside
// the likelihood so its partial derivatives stay uniformly bounded.
struct Saturation {
  double scale = 10.0;
  bool enabled = false;

  double value(double v) const { return scale * std::tanh(v / scale); }
  double deriv(double v) const {
    const double t = std::tanh(v / scale);
    return 1.0 - t * t;
  }
};

// s_i = c tanh(v_i / c) with the diagonal chain-rule factor s'_i.
void apply_saturation(const Saturation& sat, std::span<const double> v, std::span<double> s_out,
                      std::span<double> sprime_out);

}  // namespace fsmc

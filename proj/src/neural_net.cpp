#include "fsmc/neural_net.hpp"

#include <cmath>
#include <string>

#include "fsmc/errors.hpp"

namespace fsmc {

std::size_t NetworkShape::param_count() const {
  std::size_t total = 0;
  for (int l = 1; l <= layer_count(); ++l) {
    total += static_cast<std::size_t>(width(l)) * (1 + width(l - 1));
  }
  return total;
}

std::size_t NetworkShape::layer_offset(int l) const {
  std::size_t off = 0;
  for (int m = 1; m < l; ++m) off += static_cast<std::size_t>(width(m)) * (1 + width(m - 1));
  return off;
}

NetworkShape shape_from_layout(const PriorLayout& layout) {
  if (!layout.is_network()) throw ConfigError("shape_from_layout: layout is not a network prior");
  NetworkShape shape;
  shape.input_dim = layout.tcnn().input_dim;
  shape.hidden_widths = layout.tcnn().widths;
  return shape;
}

void check_activation_contract(const NetworkShape& shape) {
  if (shape.activation == Activation::TANH) return;
  if (!shape.custom_value || !shape.custom_deriv) {
    throw ConfigError("custom activation requires value and derivative callables");
  }
  const auto& zeta = shape.custom_value;
  if (zeta(0.0) != 0.0) throw ConfigError("activation contract: zeta(0) must be 0");
  const double slack = 1e-9;
  for (int i = -50; i <= 50; ++i) {
    const double x = 0.2 * i;
    if (std::abs(zeta(x)) > std::abs(x) + slack) {
      throw ConfigError("activation contract: |zeta(x)| <= |x| violated at x=" + std::to_string(x));
    }
    for (int j = i + 1; j <= 50; ++j) {
      const double y = 0.2 * j;
      if (std::abs(zeta(x) - zeta(y)) > std::abs(x - y) + slack) {
        throw ConfigError("activation contract: 1-Lipschitz violated");
      }
    }
  }
}

namespace {

inline double act_value(const NetworkShape& shape, double f) {
  return shape.activation == Activation::TANH ? std::tanh(f) : shape.custom_value(f);
}

inline double act_deriv(const NetworkShape& shape, double f, double a) {
  return shape.activation == Activation::TANH ? 1.0 - a * a : shape.custom_deriv(f);
}

std::size_t units_total(const NetworkShape& shape) {
  std::size_t total = 0;
  for (int l = 1; l <= shape.layer_count(); ++l) total += shape.width(l);
  return total;
}

// one forward pass; cache buffers, when given, point at this point's slots
void forward_one(const NetworkShape& shape, std::span<const double> params,
                 std::span<const double> x, double* preacts, double* acts, double& out,
                 std::vector<double>& scratch_prev, std::vector<double>& scratch_cur) {
  const int layers = shape.layer_count();
  scratch_prev.assign(x.begin(), x.end());
  double* pre_slot = preacts;
  double* act_slot = acts;
  for (int l = 1; l <= layers; ++l) {
    const int nl = shape.width(l);
    const int fan_in = shape.width(l - 1);
    const double* bias = params.data() + shape.layer_offset(l);
    const double* w = bias + nl;
    scratch_cur.resize(nl);
    for (int i = 0; i < nl; ++i) {
      const double* row = w + static_cast<std::size_t>(i) * fan_in;
      double f = bias[i];
      for (int j = 0; j < fan_in; ++j) f += row[j] * scratch_prev[j];
      if (pre_slot) pre_slot[i] = f;
      const double a = (l == layers) ? f : act_value(shape, f);
      scratch_cur[i] = a;
      if (act_slot) act_slot[i] = a;
    }
    if (pre_slot) {
      pre_slot += nl;
      act_slot += nl;
    }
    std::swap(scratch_prev, scratch_cur);
  }
  out = scratch_prev[0];
}

void check_point_dim(const NetworkShape& shape, std::size_t dim) {
  if (static_cast<int>(dim) != shape.input_dim) {
    throw ConfigError("network input dimension mismatch: expected " +
                      std::to_string(shape.input_dim) + ", got " + std::to_string(dim));
  }
}

}  // namespace

double nn_forward(const NetworkShape& shape, std::span<const double> params,
                  std::span<const double> x) {
  if (params.size() != shape.param_count()) {
    throw ConfigError("nn_forward: parameter count mismatch");
  }
  check_point_dim(shape, x.size());
  std::vector<double> a, b;
  double out = 0.0;
  forward_one(shape, params, x, nullptr, nullptr, out, a, b);
  return out;
}

void nn_forward_batch(const NetworkShape& shape, std::span<const double> params,
                      const std::vector<std::vector<double>>& xs, std::vector<double>& out,
                      ForwardCache* cache) {
  if (params.size() != shape.param_count()) {
    throw ConfigError("nn_forward_batch: parameter count mismatch");
  }
  const int npoints = static_cast<int>(xs.size());
  out.assign(npoints, 0.0);
  const std::size_t units = units_total(shape);
  if (cache) {
    cache->npoints = npoints;
    cache->inputs.assign(static_cast<std::size_t>(npoints) * shape.input_dim, 0.0);
    cache->preacts.assign(static_cast<std::size_t>(npoints) * units, 0.0);
    cache->acts.assign(static_cast<std::size_t>(npoints) * units, 0.0);
  }
  std::vector<double> a, b;
  for (int k = 0; k < npoints; ++k) {
    check_point_dim(shape, xs[k].size());
    double* pre = cache ? cache->preacts.data() + static_cast<std::size_t>(k) * units : nullptr;
    double* act = cache ? cache->acts.data() + static_cast<std::size_t>(k) * units : nullptr;
    if (cache) {
      std::copy(xs[k].begin(), xs[k].end(),
                cache->inputs.begin() + static_cast<std::size_t>(k) * shape.input_dim);
    }
    forward_one(shape, params, xs[k], pre, act, out[k], a, b);
  }
}

void nn_backward_accumulate(const NetworkShape& shape, std::span<const double> params,
                            const ForwardCache& cache, int point_index, double coeff,
                            std::span<double> grad) {
  const int layers = shape.layer_count();
  const std::size_t units = units_total(shape);
  const double* pre = cache.preacts.data() + static_cast<std::size_t>(point_index) * units;
  const double* act = cache.acts.data() + static_cast<std::size_t>(point_index) * units;
  const double* input = cache.inputs.data() + static_cast<std::size_t>(point_index) * shape.input_dim;

  // layer slot offsets inside the per-point cache
  std::vector<std::size_t> slot(layers + 1, 0);
  for (int l = 1; l <= layers; ++l) slot[l] = slot[l - 1] + shape.width(l);

  std::vector<double> delta(static_cast<std::size_t>(shape.width(layers)), 0.0);
  delta[0] = coeff;
  for (int l = layers; l >= 1; --l) {
    const int nl = shape.width(l);
    const int fan_in = shape.width(l - 1);
    const std::size_t off = shape.layer_offset(l);
    const double* w = params.data() + off + nl;
    const double* below = (l == 1) ? input : act + slot[l - 2];
    for (int i = 0; i < nl; ++i) {
      const double d = delta[i];
      grad[off + i] += d;
      double* grow = grad.data() + off + nl + static_cast<std::size_t>(i) * fan_in;
      for (int j = 0; j < fan_in; ++j) grow[j] += d * below[j];
    }
    if (l == 1) break;
    std::vector<double> delta_below(fan_in, 0.0);
    for (int i = 0; i < nl; ++i) {
      const double d = delta[i];
      const double* row = w + static_cast<std::size_t>(i) * fan_in;
      for (int j = 0; j < fan_in; ++j) delta_below[j] += d * row[j];
    }
    const double* pre_below = pre + slot[l - 2];
    const double* act_below = act + slot[l - 2];
    for (int j = 0; j < fan_in; ++j) {
      delta_below[j] *= act_deriv(shape, pre_below[j], act_below[j]);
    }
    delta = std::move(delta_below);
  }
}

void nn_param_jacobian(const NetworkShape& shape, std::span<const double> params,
                       const std::vector<std::vector<double>>& xs, std::vector<double>& jac) {
  const std::size_t pcount = shape.param_count();
  std::vector<double> values;
  ForwardCache cache;
  nn_forward_batch(shape, params, xs, values, &cache);
  jac.assign(xs.size() * pcount, 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    std::span<double> row(jac.data() + k * pcount, pcount);
    nn_backward_accumulate(shape, params, cache, static_cast<int>(k), 1.0, row);
  }
}

void apply_saturation(const Saturation& sat, std::span<const double> v, std::span<double> s_out,
                      std::span<double> sprime_out) {
  if (!(sat.scale > 0.0)) throw ConfigError("apply_saturation: scale must be positive");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = std::tanh(v[i] / sat.scale);
    s_out[i] = sat.scale * t;
    sprime_out[i] = 1.0 - t * t;
  }
}

}  // namespace fsmc

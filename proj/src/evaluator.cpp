#include "fsmc/evaluator.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fsmc/errors.hpp"

namespace fsmc {

int InputMap::output_dim(int input_dim) const {
  switch (kind_) {
    case Kind::IDENTITY: return input_dim;
    case Kind::SIN_2D: return 4;
    case Kind::BOX_RESCALE: return static_cast<int>(box_.size());
  }
  return input_dim;
}

void InputMap::apply(std::span<const double> x, std::vector<double>& out) const {
  switch (kind_) {
    case Kind::IDENTITY:
      out.assign(x.begin(), x.end());
      return;
    case Kind::SIN_2D:
      if (x.size() != 2) throw InputError("sin2d augmentation expects 2-d input");
      out = {x[0], x[1], std::sin(x[0]), std::sin(x[1])};
      return;
    case Kind::BOX_RESCALE: {
      if (x.size() != box_.size()) throw InputError("box_rescale: dimension mismatch");
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (x[i] - box_[i][0]) / (box_[i][1] - box_[i][0]);
      }
      return;
    }
  }
}

void FunctionEvaluator::evaluate_batch(std::span<const double> params,
                                       const std::vector<std::vector<double>>& xs,
                                       std::vector<double>& out, EvalCache*) const {
  out.resize(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) out[k] = evaluate(params, xs[k]);
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Walks the flat coordinate enumeration of a KL layout, calling
// emit(flat_index, basis_value) for every coordinate.  Uses per-axis trig
// tables so evaluation cost is linear in the coordinate count.
template <class F>
void for_each_basis(const PriorLayout& layout, std::span<const double> x, F&& emit) {
  switch (layout.family()) {
    case PriorFamily::KL_FOURIER_2D: {
      const auto& m = layout.fourier();
      std::vector<double> s1(m.kmax1 + 1), c1(m.kmax1 + 1), s2(m.kmax2 + 1), c2(m.kmax2 + 1);
      for (int k = 1; k <= m.kmax1; ++k) {
        s1[k] = std::sin(kTwoPi * k * x[0]);
        c1[k] = std::cos(kTwoPi * k * x[0]);
      }
      for (int k = 1; k <= m.kmax2; ++k) {
        s2[k] = std::sin(kTwoPi * k * x[1]);
        c2[k] = std::cos(kTwoPi * k * x[1]);
      }
      std::size_t idx = 0;
      for (int k1 = 1; k1 <= m.kmax1; ++k1) {
        for (int k2 = 1; k2 <= m.kmax2; ++k2) {
          emit(idx++, s1[k1] * s2[k2]);
          emit(idx++, c1[k1] * s2[k2]);
          emit(idx++, s1[k1] * c2[k2]);
          emit(idx++, c1[k1] * c2[k2]);
        }
      }
      return;
    }
    case PriorFamily::KL_COSINE_2D: {
      const auto& m = layout.cosine();
      std::vector<double> t1(m.imax1 + 1), t2(m.imax2 + 1);
      for (int i = 1; i <= m.imax1; ++i) t1[i] = std::cos(std::numbers::pi * (i + 0.5) * x[0]);
      for (int i = 1; i <= m.imax2; ++i) t2[i] = std::cos(std::numbers::pi * (i + 0.5) * x[1]);
      std::size_t idx = 0;
      for (int i1 = 1; i1 <= m.imax1; ++i1) {
        for (int i2 = 1; i2 <= m.imax2; ++i2) emit(idx++, 2.0 * t1[i1] * t2[i2]);
      }
      return;
    }
    case PriorFamily::KL_ANOVA: {
      const auto& m = layout.anova();
      const int kmax = std::max(m.k1d, std::max(m.k2d1, m.k2d2));
      std::vector<std::vector<double>> sd(m.dim), cd(m.dim);
      for (int d = 0; d < m.dim; ++d) {
        sd[d].resize(kmax + 1);
        cd[d].resize(kmax + 1);
        for (int k = 1; k <= kmax; ++k) {
          sd[d][k] = std::sin(kTwoPi * k * x[d]);
          cd[d][k] = std::cos(kTwoPi * k * x[d]);
        }
      }
      std::size_t idx = 0;
      for (int d = 0; d < m.dim; ++d) {
        for (int k = 1; k <= m.k1d; ++k) {
          emit(idx++, sd[d][k]);
          emit(idx++, cd[d][k]);
        }
      }
      for (int i = 0; i < m.dim; ++i) {
        for (int j = i + 1; j < m.dim; ++j) {
          for (int k1 = 1; k1 <= m.k2d1; ++k1) {
            for (int k2 = 1; k2 <= m.k2d2; ++k2) {
              emit(idx++, sd[i][k1] * sd[j][k2]);
              emit(idx++, cd[i][k1] * sd[j][k2]);
              emit(idx++, sd[i][k1] * cd[j][k2]);
              emit(idx++, cd[i][k1] * cd[j][k2]);
            }
          }
        }
      }
      return;
    }
    default:
      throw ConfigError("for_each_basis: not a KL family");
  }
}

class KlEvaluator final : public FunctionEvaluator {
 public:
  KlEvaluator(PriorLayout layout, InputMap map) : layout_(std::move(layout)), map_(std::move(map)) {
    if (map_.output_dim(domain_dim()) != layout_.input_dim()) {
      throw ConfigError("make_evaluator: augmentation output dimension (" +
                        std::to_string(map_.output_dim(domain_dim())) +
                        ") does not match layout input dimension (" +
                        std::to_string(layout_.input_dim()) + ")");
    }
  }

  std::size_t param_count() const override { return layout_.param_count(); }
  int domain_dim() const override {
    if (map_.kind() == InputMap::Kind::BOX_RESCALE) return static_cast<int>(map_.box().size());
    if (map_.kind() == InputMap::Kind::SIN_2D) return 2;
    return layout_.input_dim();
  }
  bool linear_in_params() const override { return true; }

  double evaluate(std::span<const double> params, std::span<const double> x) const override {
    check_params(params);
    std::vector<double> z;
    map_.apply(x, z);
    double u = 0.0;
    for_each_basis(layout_, z, [&](std::size_t i, double phi) { u += params[i] * phi; });
    return u;
  }

  void param_jacobian(std::span<const double> params, const std::vector<std::vector<double>>& xs,
                      std::vector<double>& jac) const override {
    check_params(params);
    const std::size_t p = param_count();
    jac.assign(xs.size() * p, 0.0);
    std::vector<double> z;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      map_.apply(xs[k], z);
      double* row = jac.data() + k * p;
      for_each_basis(layout_, z, [&](std::size_t i, double phi) { row[i] = phi; });
    }
  }

  void accumulate_param_gradient(std::span<const double> params,
                                 const std::vector<std::vector<double>>& xs,
                                 std::span<const double> coeff, std::span<double> grad,
                                 EvalCache*) const override {
    check_params(params);
    std::vector<double> z;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double c = coeff[k];
      if (c == 0.0) continue;
      map_.apply(xs[k], z);
      for_each_basis(layout_, z, [&](std::size_t i, double phi) { grad[i] += c * phi; });
    }
  }

 private:
  void check_params(std::span<const double> params) const {
    if (params.size() != layout_.param_count()) {
      throw ConfigError("KL evaluator: parameter count mismatch");
    }
  }
  PriorLayout layout_;
  InputMap map_;
};

struct NnEvalCache final : EvalCache {
  ForwardCache forward;
  std::vector<std::vector<double>> augmented;
  bool filled = false;
};

class NnEvaluator final : public FunctionEvaluator {
 public:
  NnEvaluator(PriorLayout layout, InputMap map) : layout_(std::move(layout)), map_(std::move(map)) {
    shape_ = shape_from_layout(layout_);
    if (map_.output_dim(domain_dim()) != shape_.input_dim) {
      throw ConfigError("make_evaluator: augmentation output dimension (" +
                        std::to_string(map_.output_dim(domain_dim())) +
                        ") does not match network input dimension (" +
                        std::to_string(shape_.input_dim) + ")");
    }
  }

  std::size_t param_count() const override { return layout_.param_count(); }
  int domain_dim() const override {
    if (map_.kind() == InputMap::Kind::BOX_RESCALE) return static_cast<int>(map_.box().size());
    if (map_.kind() == InputMap::Kind::SIN_2D) return 2;
    return shape_.input_dim;
  }
  bool linear_in_params() const override { return false; }

  double evaluate(std::span<const double> params, std::span<const double> x) const override {
    std::vector<double> z;
    map_.apply(x, z);
    return nn_forward(shape_, params, z);
  }

  std::unique_ptr<EvalCache> make_cache() const override {
    return std::make_unique<NnEvalCache>();
  }

  void evaluate_batch(std::span<const double> params, const std::vector<std::vector<double>>& xs,
                      std::vector<double>& out, EvalCache* cache) const override {
    auto* c = dynamic_cast<NnEvalCache*>(cache);
    std::vector<std::vector<double>> local;
    auto& aug = c ? c->augmented : local;
    augment(xs, aug);
    nn_forward_batch(shape_, params, aug, out, c ? &c->forward : nullptr);
    if (c) c->filled = true;
  }

  void param_jacobian(std::span<const double> params, const std::vector<std::vector<double>>& xs,
                      std::vector<double>& jac) const override {
    std::vector<std::vector<double>> aug;
    augment(xs, aug);
    nn_param_jacobian(shape_, params, aug, jac);
  }

  void accumulate_param_gradient(std::span<const double> params,
                                 const std::vector<std::vector<double>>& xs,
                                 std::span<const double> coeff, std::span<double> grad,
                                 EvalCache* cache) const override {
    auto* c = dynamic_cast<NnEvalCache*>(cache);
    NnEvalCache local;
    if (!c || !c->filled) {
      c = &local;
      std::vector<double> unused;
      evaluate_batch(params, xs, unused, c);
    }
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (coeff[k] == 0.0) continue;
      nn_backward_accumulate(shape_, params, c->forward, static_cast<int>(k), coeff[k], grad);
    }
  }

 private:
  void augment(const std::vector<std::vector<double>>& xs,
               std::vector<std::vector<double>>& out) const {
    out.resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) map_.apply(xs[k], out[k]);
  }

  PriorLayout layout_;
  InputMap map_;
  NetworkShape shape_;
};

}  // namespace

std::unique_ptr<FunctionEvaluator> make_evaluator(const PriorLayout& layout, InputMap map) {
  if (layout.is_network()) {
    return std::make_unique<NnEvaluator>(layout, std::move(map));
  }
  return std::make_unique<KlEvaluator>(layout, std::move(map));
}

}  // namespace fsmc

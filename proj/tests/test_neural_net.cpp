#include <doctest.h>

#include <cmath>

#include "fsmc/errors.hpp"
#include "fsmc/neural_net.hpp"
#include "fsmc/prior_layout.hpp"
#include "fsmc/rng.hpp"

using namespace fsmc;

namespace {

// Textbook re-implementation used as an oracle: unpacks the flat vector into
// explicit per-layer matrices, then runs plain nested loops.
double naive_forward(const NetworkShape& shape, const std::vector<double>& params,
                     const std::vector<double>& x) {
  std::vector<double> cur = x;
  for (int l = 1; l <= shape.layer_count(); ++l) {
    const int nl = shape.width(l);
    const int prev = shape.width(l - 1);
    const std::size_t off = shape.layer_offset(l);
    std::vector<std::vector<double>> w(nl, std::vector<double>(prev));
    std::vector<double> b(nl);
    for (int i = 0; i < nl; ++i) {
      b[i] = params[off + i];
      for (int j = 0; j < prev; ++j) w[i][j] = params[off + nl + i * prev + j];
    }
    std::vector<double> next(nl);
    for (int i = 0; i < nl; ++i) {
      double f = b[i];
      for (int j = 0; j < prev; ++j) f += w[i][j] * cur[j];
      next[i] = (l == shape.layer_count()) ? f : std::tanh(f);
    }
    cur = next;
  }
  return cur[0];
}

std::vector<double> random_params(const NetworkShape& shape, Rng& rng, double scale = 0.8) {
  std::vector<double> p(shape.param_count());
  for (auto& v : p) v = scale * rng.normal();
  return p;
}

}  // namespace

TEST_CASE("forward basics") {
  NetworkShape shape{2, {1}};
  // bias1=0, w1=[1,0]; output bias=0, w2=[1]  =>  v(x) = tanh(x1)
  std::vector<double> params = {0.0, 1.0, 0.0, 0.0, 1.0};
  REQUIRE(params.size() == shape.param_count());
  for (double x1 : {-1.3, 0.0, 0.4, 2.0}) {
    CHECK(nn_forward(shape, params, std::vector<double>{x1, 0.77}) ==
          doctest::Approx(std::tanh(x1)).epsilon(1e-16));
  }

  // all parameters zero: v identically 0
  NetworkShape deep{3, {4, 4, 4}};
  std::vector<double> zeros(deep.param_count(), 0.0);
  CHECK(nn_forward(deep, zeros, std::vector<double>{0.1, -0.2, 0.9}) == 0.0);

  CHECK_THROWS_AS(nn_forward(shape, params, std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS(nn_forward(shape, std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}),
                  ConfigError);
}

TEST_CASE("forward matches the naive oracle") {
  NetworkShape shape{2, {3, 3}};
  Rng rng(5, "fwd-oracle");
  for (int rep = 0; rep < 50; ++rep) {
    const auto params = random_params(shape, rng);
    const std::vector<double> x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double got = nn_forward(shape, params, x);
    const double want = naive_forward(shape, params, x);
    CHECK(std::abs(got - want) <= 1e-14 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("forward_batch agrees with forward and commutes with permutation") {
  NetworkShape shape{2, {5, 4}};
  Rng rng(6, "fwd-batch");
  const auto params = random_params(shape, rng);

  std::vector<std::vector<double>> xs;
  for (int k = 0; k < 7; ++k) xs.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});

  std::vector<double> out;
  nn_forward_batch(shape, params, xs, out);
  REQUIRE(out.size() == xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) CHECK(out[k] == nn_forward(shape, params, xs[k]));

  std::vector<std::vector<double>> rev(xs.rbegin(), xs.rend());
  std::vector<double> out_rev;
  nn_forward_batch(shape, params, rev, out_rev);
  for (std::size_t k = 0; k < xs.size(); ++k) CHECK(out_rev[k] == out[xs.size() - 1 - k]);
}

TEST_CASE("jacobian at zero parameters") {
  NetworkShape shape{2, {3, 3}};
  std::vector<double> zeros(shape.param_count(), 0.0);
  std::vector<std::vector<double>> xs = {{0.4, -0.6}};
  std::vector<double> jac;
  nn_param_jacobian(shape, zeros, xs, jac);

  const int L = shape.layer_count();
  CHECK(jac[shape.layer_offset(L)] == 1.0);  // d v / d output bias
  for (int j = 1; j <= shape.width(L - 1); ++j) {
    // d v / d output weight = zeta(0) = 0
    CHECK(jac[shape.layer_offset(L) + 1 + (j - 1)] == 0.0);
  }
}

TEST_CASE("jacobian matches central finite differences") {
  Rng rng(7, "jac-fd");
  const std::vector<NetworkShape> shapes = {
      {1, {1}}, {2, {3}}, {2, {4, 3}}, {3, {8, 5, 2}}, {2, {2, 2, 2}}};
  for (const auto& shape : shapes) {
    auto params = random_params(shape, rng);
    std::vector<std::vector<double>> xs;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> x(shape.input_dim);
      for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
      xs.push_back(x);
    }
    std::vector<double> jac;
    nn_param_jacobian(shape, params, xs, jac);

    const std::size_t P = shape.param_count();
    for (std::size_t k = 0; k < xs.size(); ++k) {
      for (std::size_t i = 0; i < P; ++i) {
        const double h = 1e-5 * (1.0 + std::abs(params[i]));
        auto plus = params, minus = params;
        plus[i] += h;
        minus[i] -= h;
        const double fd =
            (nn_forward(shape, plus, xs[k]) - nn_forward(shape, minus, xs[k])) / (2.0 * h);
        const double got = jac[k * P + i];
        if (std::abs(fd) < 1e-3) {
          CHECK(std::abs(got - fd) <= 1e-9);
        } else {
          CHECK(std::abs(got - fd) <= 1e-6 * std::abs(fd));
        }
      }
    }
  }
}

TEST_CASE("identity activation exposes the forward cache in the jacobian") {
  NetworkShape shape{2, {4}};
  shape.activation = Activation::LIPSCHITZ_CUSTOM;
  shape.custom_value = [](double v) { return v; };
  shape.custom_deriv = [](double) { return 1.0; };
  check_activation_contract(shape);

  Rng rng(8, "lin-act");
  const auto params = random_params(shape, rng);
  std::vector<std::vector<double>> xs = {{0.3, -0.9}};
  std::vector<double> out;
  ForwardCache cache;
  nn_forward_batch(shape, params, xs, out, &cache);
  std::vector<double> jac;
  nn_param_jacobian(shape, params, xs, jac);

  // with identity activation, d v / d w2_j = zeta(f_j) = cached activation
  const std::size_t off = shape.layer_offset(2);
  for (int j = 0; j < 4; ++j) {
    CHECK(jac[off + 1 + j] == cache.acts[j]);
  }
}

TEST_CASE("activation contract is enforced") {
  NetworkShape bad{2, {2}};
  bad.activation = Activation::LIPSCHITZ_CUSTOM;
  bad.custom_value = [](double v) { return 2.0 * v; };
  bad.custom_deriv = [](double) { return 2.0; };
  CHECK_THROWS_AS(check_activation_contract(bad), ConfigError);

  NetworkShape shifted{2, {2}};
  shifted.activation = Activation::LIPSCHITZ_CUSTOM;
  shifted.custom_value = [](double v) { return std::tanh(v) + 0.1; };
  shifted.custom_deriv = [](double v) { return 1.0 - std::tanh(v) * std::tanh(v); };
  CHECK_THROWS_AS(check_activation_contract(shifted), ConfigError);
}

TEST_CASE("lipschitz propagation bound") {
  Rng rng(9, "lip");
  NetworkShape shape{2, {6, 5}};
  for (int rep = 0; rep < 20; ++rep) {
    const auto params = random_params(shape, rng, 1.2);
    // product over layers of the row-norm sums bounds the network's
    // Lipschitz constant
    double lip = 1.0;
    for (int l = 1; l <= shape.layer_count(); ++l) {
      const int nl = shape.width(l), prev = shape.width(l - 1);
      const std::size_t off = shape.layer_offset(l);
      double rowsum = 0.0;
      for (int i = 0; i < nl; ++i) {
        double r2 = 0.0;
        for (int j = 0; j < prev; ++j) {
          const double w = params[off + nl + i * prev + j];
          r2 += w * w;
        }
        rowsum += std::sqrt(r2);
      }
      lip *= rowsum;
    }
    const std::vector<double> x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const std::vector<double> y = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double dv = std::abs(nn_forward(shape, params, x) - nn_forward(shape, params, y));
    const double dx = std::hypot(x[0] - y[0], x[1] - y[1]);
    CHECK(dv <= lip * dx + 1e-12);
  }
}

TEST_CASE("node relabeling leaves the output unchanged") {
  const auto layout = build_tcnn({5, 5}, 2, 1.5, {2, 2, 2}, {2, 2, 2});
  const auto shape = shape_from_layout(layout);
  Rng rng(10, "relabel");
  for (int rep = 0; rep < 10; ++rep) {
    auto theta = prior_sample(layout, rng);
    // swap nodes 2 and 3 of hidden layer 1: incoming rows, outgoing columns,
    // biases
    auto swapped = theta;
    const int l = 1, i = 2;
    std::swap(swapped[layout.bias_index(l, i)], swapped[layout.bias_index(l, i + 1)]);
    for (int j = 1; j <= layout.layer_width(l - 1); ++j) {
      std::swap(swapped[layout.weight_index(l, i, j)], swapped[layout.weight_index(l, i + 1, j)]);
    }
    for (int k = 1; k <= layout.layer_width(l + 1); ++k) {
      std::swap(swapped[layout.weight_index(l + 1, k, i)],
                swapped[layout.weight_index(l + 1, k, i + 1)]);
    }
    const std::vector<double> x = {rng.uniform01(), rng.uniform01()};
    const double v0 = nn_forward(shape, theta, x);
    const double v1 = nn_forward(shape, swapped, x);
    // agreement to rounding: only the accumulation order of two adjacent
    // summands changes
    CHECK(std::abs(v0 - v1) <= 4e-15 * std::max(1.0, std::abs(v0)));
  }
}

TEST_CASE("saturation") {
  Saturation sat{10.0, true};
  std::vector<double> v = {0.0, 1.0, 500.0, -500.0};
  std::vector<double> s(v.size()), sp(v.size());
  apply_saturation(sat, v, s, sp);

  CHECK(s[0] == 0.0);
  CHECK(sp[0] == 1.0);
  CHECK(s[1] == doctest::Approx(10.0 * std::tanh(0.1)).epsilon(1e-16));
  CHECK(std::abs(s[1] - 0.99667) <= 1e-5);
  CHECK(s[2] == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(s[3] == doctest::Approx(-10.0).epsilon(1e-10));
  CHECK(sp[2] <= 1e-10);
  for (double x : v) CHECK(std::abs(sat.value(x)) <= sat.scale);

  Saturation bad{-1.0, true};
  CHECK_THROWS_AS(apply_saturation(bad, v, s, sp), ConfigError);
}

#include "fsmc/prior_layout.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fsmc/errors.hpp"

namespace fsmc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double fourier_pair_variance(int k1, int k2, double alpha) {
  return std::pow(static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2, -alpha / 2.0);
}

// the four phase products of the tensor Fourier basis, in enumeration order
double fourier_pair_value(int phase, int k1, int k2, double x1, double x2) {
  const double a = kTwoPi * k1 * x1;
  const double b = kTwoPi * k2 * x2;
  switch (phase) {
    case 0: return std::sin(a) * std::sin(b);
    case 1: return std::cos(a) * std::sin(b);
    case 2: return std::sin(a) * std::cos(b);
    default: return std::cos(a) * std::cos(b);
  }
}
}  // namespace

const char* family_name(PriorFamily f) {
  switch (f) {
    case PriorFamily::KL_FOURIER_2D: return "KL_FOURIER_2D";
    case PriorFamily::KL_COSINE_2D: return "KL_COSINE_2D";
    case PriorFamily::KL_ANOVA: return "KL_ANOVA";
    case PriorFamily::TCNN: return "TCNN";
    case PriorFamily::BNN_STANDARD: return "BNN_STANDARD";
  }
  return "?";
}

PriorFamily family_from_name(std::string_view name) {
  if (name == "KL_FOURIER_2D") return PriorFamily::KL_FOURIER_2D;
  if (name == "KL_COSINE_2D") return PriorFamily::KL_COSINE_2D;
  if (name == "KL_ANOVA") return PriorFamily::KL_ANOVA;
  if (name == "TCNN") return PriorFamily::TCNN;
  if (name == "BNN_STANDARD") return PriorFamily::BNN_STANDARD;
  throw ConfigError("unknown prior family: " + std::string(name));
}

PriorLayout::PriorLayout(PriorFamily family, std::vector<double> stddevs,
                         std::variant<FourierMeta, CosineMeta, AnovaMeta, TcnnMeta> meta)
    : family_(family), stddevs_(std::move(stddevs)), meta_(std::move(meta)) {
  if (stddevs_.empty()) throw ConfigError("PriorLayout: empty coordinate set");
  for (double s : stddevs_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("PriorLayout: coordinate std-devs must be finite and positive");
    }
    trace_ += s * s;
  }
  if (is_network()) {
    const auto& m = tcnn();
    layer_offsets_.assign(layer_count() + 1, 0);
    std::size_t off = 0;
    for (int l = 1; l <= layer_count(); ++l) {
      layer_offsets_[l - 1] = off;
      off += static_cast<std::size_t>(layer_width(l)) * (1 + layer_width(l - 1));
    }
    layer_offsets_[layer_count()] = off;
    if (off != stddevs_.size()) throw ConfigError("PriorLayout: network size mismatch");
    (void)m;
  }
}

int PriorLayout::input_dim() const {
  switch (family_) {
    case PriorFamily::KL_FOURIER_2D:
    case PriorFamily::KL_COSINE_2D:
      return 2;
    case PriorFamily::KL_ANOVA:
      return anova().dim;
    case PriorFamily::TCNN:
    case PriorFamily::BNN_STANDARD:
      return tcnn().input_dim;
  }
  return 0;
}

int PriorLayout::layer_count() const {
  return static_cast<int>(tcnn().widths.size()) + 1;
}

int PriorLayout::layer_width(int l) const {
  const auto& m = tcnn();
  if (l == 0) return m.input_dim;
  if (l <= static_cast<int>(m.widths.size())) return m.widths[l - 1];
  return 1;
}

std::size_t PriorLayout::layer_offset(int l) const { return layer_offsets_[l - 1]; }

std::size_t PriorLayout::bias_index(int l, int i) const {
  return layer_offset(l) + static_cast<std::size_t>(i - 1);
}

std::size_t PriorLayout::weight_index(int l, int i, int j) const {
  return layer_offset(l) + static_cast<std::size_t>(layer_width(l)) +
         static_cast<std::size_t>(i - 1) * layer_width(l - 1) + (j - 1);
}

double PriorLayout::basis_value(std::size_t flat_index, std::span<const double> x) const {
  switch (family_) {
    case PriorFamily::KL_FOURIER_2D: {
      const auto& m = fourier();
      const std::size_t per_k1 = static_cast<std::size_t>(m.kmax2) * 4;
      const int k1 = 1 + static_cast<int>(flat_index / per_k1);
      const int k2 = 1 + static_cast<int>((flat_index % per_k1) / 4);
      const int phase = static_cast<int>(flat_index % 4);
      return fourier_pair_value(phase, k1, k2, x[0], x[1]);
    }
    case PriorFamily::KL_COSINE_2D: {
      const auto& m = cosine();
      const int i1 = 1 + static_cast<int>(flat_index / m.imax2);
      const int i2 = 1 + static_cast<int>(flat_index % m.imax2);
      return 2.0 * std::cos(std::numbers::pi * (i1 + 0.5) * x[0]) *
             std::cos(std::numbers::pi * (i2 + 0.5) * x[1]);
    }
    case PriorFamily::KL_ANOVA: {
      const auto& m = anova();
      const std::size_t one_d_total = static_cast<std::size_t>(m.dim) * 2 * m.k1d;
      if (flat_index < one_d_total) {
        const int dim = static_cast<int>(flat_index / (2 * m.k1d));
        const std::size_t r = flat_index % (2 * m.k1d);
        const int k = 1 + static_cast<int>(r / 2);
        const double a = kTwoPi * k * x[dim];
        return (r % 2 == 0) ? std::sin(a) : std::cos(a);
      }
      std::size_t r = flat_index - one_d_total;
      const std::size_t per_pair = static_cast<std::size_t>(m.k2d1) * m.k2d2 * 4;
      std::size_t pair = r / per_pair;
      r %= per_pair;
      // pair index back to (i, j), i < j, lexicographic
      int i = 0;
      std::size_t remaining = pair;
      while (remaining >= static_cast<std::size_t>(m.dim - 1 - i)) {
        remaining -= m.dim - 1 - i;
        ++i;
      }
      const int j = i + 1 + static_cast<int>(remaining);
      const int k1 = 1 + static_cast<int>(r / (m.k2d2 * 4));
      const int k2 = 1 + static_cast<int>((r % (m.k2d2 * 4)) / 4);
      const int phase = static_cast<int>(r % 4);
      return fourier_pair_value(phase, k1, k2, x[i], x[j]);
    }
    default:
      throw ConfigError("basis_value: only defined for KL families");
  }
}

DiagonalGaussian PriorLayout::to_gaussian() const {
  std::vector<double> vars(stddevs_.size());
  for (std::size_t i = 0; i < vars.size(); ++i) vars[i] = stddevs_[i] * stddevs_[i];
  return DiagonalGaussian(std::move(vars));
}

PriorLayout build_kl_fourier_2d(int kmax1, int kmax2, double alpha) {
  if (kmax1 < 1 || kmax2 < 1) throw ConfigError("build_kl_fourier_2d: kmax must be >= 1");
  if (!(alpha > 1.0)) {
    throw ConfigError("build_kl_fourier_2d: alpha must be > 1 (trace-class violated)");
  }
  std::vector<double> stddevs;
  stddevs.reserve(static_cast<std::size_t>(kmax1) * kmax2 * 4);
  for (int k1 = 1; k1 <= kmax1; ++k1) {
    for (int k2 = 1; k2 <= kmax2; ++k2) {
      const double s = std::sqrt(fourier_pair_variance(k1, k2, alpha));
      for (int phase = 0; phase < 4; ++phase) stddevs.push_back(s);
    }
  }
  return PriorLayout(PriorFamily::KL_FOURIER_2D, std::move(stddevs),
                     FourierMeta{kmax1, kmax2, alpha});
}

PriorLayout build_kl_cosine_2d(int imax1, int imax2) {
  if (imax1 < 1 || imax2 < 1) throw ConfigError("build_kl_cosine_2d: imax must be >= 1");
  const double exponent = 1.1;
  std::vector<double> stddevs;
  stddevs.reserve(static_cast<std::size_t>(imax1) * imax2);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int i1 = 1; i1 <= imax1; ++i1) {
    for (int i2 = 1; i2 <= imax2; ++i2) {
      const double lam2 =
          std::pow(pi2 * ((i1 + 0.5) * (i1 + 0.5) + (i2 + 0.5) * (i2 + 0.5)), -exponent);
      stddevs.push_back(std::sqrt(lam2));
    }
  }
  return PriorLayout(PriorFamily::KL_COSINE_2D, std::move(stddevs),
                     CosineMeta{imax1, imax2, exponent});
}

PriorLayout build_kl_anova(int d, int k1d, int k2d1, int k2d2, double alpha) {
  if (d < 2) throw ConfigError("build_kl_anova: d must be >= 2");
  if (k1d < 1 || k2d1 < 1 || k2d2 < 1) throw ConfigError("build_kl_anova: truncations must be >= 1");
  if (!(alpha > 1.0)) {
    throw ConfigError("build_kl_anova: alpha must be > 1 (trace-class violated)");
  }
  std::vector<double> stddevs;
  stddevs.reserve(static_cast<std::size_t>(d) * 2 * k1d +
                  static_cast<std::size_t>(d) * (d - 1) / 2 * 4 * k2d1 * k2d2);
  for (int dim = 0; dim < d; ++dim) {
    for (int k = 1; k <= k1d; ++k) {
      const double s = std::sqrt(std::pow(static_cast<double>(k), -alpha));
      stddevs.push_back(s);  // sin
      stddevs.push_back(s);  // cos
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      for (int k1 = 1; k1 <= k2d1; ++k1) {
        for (int k2 = 1; k2 <= k2d2; ++k2) {
          const double s = std::sqrt(fourier_pair_variance(k1, k2, alpha));
          for (int phase = 0; phase < 4; ++phase) stddevs.push_back(s);
        }
      }
    }
  }
  return PriorLayout(PriorFamily::KL_ANOVA, std::move(stddevs),
                     AnovaMeta{d, k1d, k2d1, k2d2, alpha});
}

PriorLayout build_tcnn(std::vector<int> widths, int input_dim, double alpha,
                       std::vector<double> sigma2_w, std::vector<double> sigma2_b) {
  if (widths.empty()) throw ConfigError("build_tcnn: at least one hidden layer required");
  for (int w : widths) {
    if (w < 1) throw ConfigError("build_tcnn: widths must be >= 1");
  }
  if (input_dim < 1) throw ConfigError("build_tcnn: input_dim must be >= 1");
  if (alpha < 0.0) throw ConfigError("build_tcnn: alpha must be >= 0");
  const std::size_t layers = widths.size() + 1;
  if (sigma2_w.size() != layers || sigma2_b.size() != layers) {
    throw ConfigError("build_tcnn: need one sigma2 per layer (n+1 layers)");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (!(sigma2_w[l] > 0.0) || !(sigma2_b[l] > 0.0)) {
      throw ConfigError("build_tcnn: sigma2 must be strictly positive");
    }
  }

  std::vector<double> stddevs;
  auto width_at = [&](std::size_t l) -> int {  // l = 0..n+1
    if (l == 0) return input_dim;
    if (l <= widths.size()) return widths[l - 1];
    return 1;
  };
  for (std::size_t l = 1; l <= layers; ++l) {
    const int nl = width_at(l);
    const int fan_in = width_at(l - 1);
    for (int i = 1; i <= nl; ++i) {
      stddevs.push_back(std::sqrt(sigma2_b[l - 1] / std::pow(static_cast<double>(i), alpha)));
    }
    for (int i = 1; i <= nl; ++i) {
      for (int j = 1; j <= fan_in; ++j) {
        const double decay = (l == 1) ? std::pow(static_cast<double>(i), alpha)
                                      : std::pow(static_cast<double>(i) * j, alpha);
        stddevs.push_back(std::sqrt(sigma2_w[l - 1] / decay));
      }
    }
  }

  const PriorFamily family = (alpha == 0.0) ? PriorFamily::BNN_STANDARD : PriorFamily::TCNN;
  return PriorLayout(family, std::move(stddevs),
                     TcnnMeta{std::move(widths), input_dim, alpha, std::move(sigma2_w),
                              std::move(sigma2_b)});
}

std::vector<double> prior_sample(const PriorLayout& layout, Rng& rng) {
  std::vector<double> coords(layout.param_count());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = layout.stddev(i) * rng.normal();
  return coords;
}

}  // namespace fsmc

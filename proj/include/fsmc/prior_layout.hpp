#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "fsmc/gaussian.hpp"
#include "fsmc/rng.hpp"

namespace fsmc {

enum class PriorFamily { KL_FOURIER_2D, KL_COSINE_2D, KL_ANOVA, TCNN, BNN_STANDARD };

const char* family_name(PriorFamily f);
PriorFamily family_from_name(std::string_view name);

// --- structural metadata per family ------------------------------------

struct FourierMeta {
  int kmax1 = 0;
  int kmax2 = 0;
  double alpha = 0.0;
};

struct CosineMeta {
  int imax1 = 0;
  int imax2 = 0;
  double exponent = 1.1;
};

struct AnovaMeta {
  int dim = 0;       // domain dimension d
  int k1d = 0;       // 1-D truncation (frequencies 1..k1d, sin and cos each)
  int k2d1 = 0;      // 2-D truncation per axis
  int k2d2 = 0;
  double alpha = 0.0;
};

struct TcnnMeta {
  std::vector<int> widths;        // hidden widths N^(1)..N^(n)
  int input_dim = 0;              // d
  double alpha = 0.0;             // 0 => standard BNN semantics
  std::vector<double> sigma2_w;   // per layer 1..n+1
  std::vector<double> sigma2_b;   // per layer 1..n+1
};

// Coordinate layout of a prior: family, per-coordinate standard deviations
// lambda_i, and the structural metadata needed to enumerate coordinates and
// evaluate basis functions.  The flat enumeration is total and bijective;
// layouts are immutable after construction.
class PriorLayout {
 public:
  PriorLayout(PriorFamily family, std::vector<double> stddevs,
              std::variant<FourierMeta, CosineMeta, AnovaMeta, TcnnMeta> meta);

  PriorFamily family() const { return family_; }
  std::size_t param_count() const { return stddevs_.size(); }
  double stddev(std::size_t i) const { return stddevs_[i]; }
  double variance(std::size_t i) const { return stddevs_[i] * stddevs_[i]; }
  const std::vector<double>& stddevs() const { return stddevs_; }
  double trace() const { return trace_; }  // truncated sum of variances

  bool is_network() const {
    return family_ == PriorFamily::TCNN || family_ == PriorFamily::BNN_STANDARD;
  }
  // dimension of the evaluator input (post augmentation)
  int input_dim() const;

  const FourierMeta& fourier() const { return std::get<FourierMeta>(meta_); }
  const CosineMeta& cosine() const { return std::get<CosineMeta>(meta_); }
  const AnovaMeta& anova() const { return std::get<AnovaMeta>(meta_); }
  const TcnnMeta& tcnn() const { return std::get<TcnnMeta>(meta_); }

  // --- network coordinate bookkeeping (TCNN / BNN_STANDARD only) ---
  // Layers l = 1..n+1; within a layer biases come first (i ascending), then
  // weights row-major (i outer, j inner).  Indices i, j are 1-based as in the
  // variance formulas.
  int layer_count() const;              // n+1
  int layer_width(int l) const;         // N^(l), with l=0 the input dim
  std::size_t layer_offset(int l) const;
  std::size_t bias_index(int l, int i) const;
  std::size_t weight_index(int l, int i, int j) const;

  // Slow reference evaluation of basis function i at x (KL families only).
  double basis_value(std::size_t flat_index, std::span<const double> x) const;

  DiagonalGaussian to_gaussian() const;

 private:
  PriorFamily family_;
  std::vector<double> stddevs_;
  double trace_ = 0.0;
  std::variant<FourierMeta, CosineMeta, AnovaMeta, TcnnMeta> meta_;
  std::vector<std::size_t> layer_offsets_;  // networks only
};

// --- builders -----------------------------------------------------------

// Tensor Fourier basis on [0,1]^2: for every (k1,k2) with 1<=k_i<=kmax_i the
// four sin/cos phase products, each with variance (k1^2+k2^2)^(-alpha/2).
// Requires alpha > 1 (trace-class).
PriorLayout build_kl_fourier_2d(int kmax1, int kmax2, double alpha);

// Shifted cosine basis phi_i(x) = 2 cos(pi (i1+1/2) x1) cos(pi (i2+1/2) x2)
// with variances (pi^2 ((i1+1/2)^2 + (i2+1/2)^2))^(-1.1), 1 <= i_k <= imax_k.
PriorLayout build_kl_cosine_2d(int imax1, int imax2);

// ANOVA truncation: d univariate Fourier expansions plus d(d-1)/2 bivariate
// tensor expansions, mixed interactions of order > 2 dropped.
PriorLayout build_kl_anova(int d, int k1d, int k2d1, int k2d2, double alpha);

// Feed-forward network prior.  Variances decay into the tail nodes:
// layer-1 weight (i,j): sigma2_w/i^alpha; deeper weights: sigma2_w/(i j)^alpha;
// biases: sigma2_b/i^alpha.  alpha = 0 gives the exchangeable standard BNN.
PriorLayout build_tcnn(std::vector<int> widths, int input_dim, double alpha,
                       std::vector<double> sigma2_w, std::vector<double> sigma2_b);

// Coordinate i drawn N(0, lambda_i^2), independently.
std::vector<double> prior_sample(const PriorLayout& layout, Rng& rng);

}  // namespace fsmc

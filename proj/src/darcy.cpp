#include "fsmc/darcy.hpp"

#include <cmath>
#include <string>

#include "fsmc/errors.hpp"

namespace fsmc {

Grid2D::Grid2D(int cells) : n(cells) {
  if (cells < 4) throw ConfigError("Grid2D: need at least 4 cells per axis");
}

std::vector<std::vector<double>> Grid2D::nodes() const {
  std::vector<std::vector<double>> pts;
  pts.reserve(node_count());
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) pts.push_back({i * h(), j * h()});
  }
  return pts;
}

void validate_head_field(const HeadField& field) {
  const Grid2D& g = field.grid;
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i <= g.n; ++i) {
    const double x1 = i * g.h();
    if (field.at(i, 0) != x1 || field.at(i, g.n) != 1.0 - x1) {
      throw EvalError("HeadField: Dirichlet rows not exact");
    }
    lo = std::min({lo, field.at(i, 0), field.at(i, g.n)});
    hi = std::max({hi, field.at(i, 0), field.at(i, g.n)});
  }
  const double slack = 1e-9 * (hi - lo);
  for (int j = 1; j < g.n; ++j) {
    for (int i = 0; i <= g.n; ++i) {
      const double p = field.at(i, j);
      if (p < lo - slack || p > hi + slack) {
        throw EvalError("HeadField: discrete maximum principle violated at node (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

namespace {

inline double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

HeadField darcy_solve(const std::vector<double>& u_nodes, const Grid2D& grid, double tol) {
  const int n = grid.n;
  if (u_nodes.size() != grid.node_count()) throw ConfigError("darcy_solve: u size mismatch");
  if (!(tol > 0.0)) throw ConfigError("darcy_solve: tol must be positive");
  for (double u : u_nodes) {
    if (!std::isfinite(u)) throw EvalError("darcy_solve: non-finite log-permeability");
  }

  const int ni = n + 1;       // unknown columns i = 0..n
  const int nj = n - 1;       // unknown rows j = 1..n-1
  const std::size_t N = static_cast<std::size_t>(ni) * nj;
  auto uidx = [&](int i, int j) { return static_cast<std::size_t>(j - 1) * ni + i; };

  std::vector<double> perm(grid.node_count());
  for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = std::exp(u_nodes[k]);

  // transmissibilities; vertical faces at the Neumann columns have half width
  std::vector<double> th(static_cast<std::size_t>(n) * (n + 1));   // (i,j): (i,j)-(i+1,j)
  std::vector<double> tv(static_cast<std::size_t>(n + 1) * n);     // (i,j): (i,j)-(i,j+1)
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i < n; ++i) {
      th[static_cast<std::size_t>(j) * n + i] =
          harmonic(perm[grid.index(i, j)], perm[grid.index(i + 1, j)]);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      tv[static_cast<std::size_t>(j) * (n + 1) + i] =
          w * harmonic(perm[grid.index(i, j)], perm[grid.index(i, j + 1)]);
    }
  }
  auto th_at = [&](int i, int j) { return th[static_cast<std::size_t>(j) * n + i]; };
  auto tv_at = [&](int i, int j) { return tv[static_cast<std::size_t>(j) * (n + 1) + i]; };

  auto dirichlet_bottom = [&](int i) { return i * grid.h(); };
  auto dirichlet_top = [&](int i) { return 1.0 - i * grid.h(); };

  // A x = b with A SPD: diagonal of coupling sums, negative couplings off it
  std::vector<double> diag(N, 0.0), rhs(N, 0.0);
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i <= n; ++i) {
      double d = tv_at(i, j - 1) + tv_at(i, j);
      if (i > 0) d += th_at(i - 1, j);
      if (i < n) d += th_at(i, j);
      diag[uidx(i, j)] = d;
      if (j == 1) rhs[uidx(i, j)] += tv_at(i, 0) * dirichlet_bottom(i);
      if (j == n - 1) rhs[uidx(i, j)] += tv_at(i, n - 1) * dirichlet_top(i);
    }
  }

  auto apply_A = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int j = 1; j < n; ++j) {
      for (int i = 0; i <= n; ++i) {
        const std::size_t c = uidx(i, j);
        double acc = diag[c] * x[c];
        if (i > 0) acc -= th_at(i - 1, j) * x[c - 1];
        if (i < n) acc -= th_at(i, j) * x[c + 1];
        if (j > 1) acc -= tv_at(i, j - 1) * x[c - ni];
        if (j < n - 1) acc -= tv_at(i, j) * x[c + ni];
        y[c] = acc;
      }
    }
  };

  // start from the Dirichlet interpolant (the exact solution for constant u)
  std::vector<double> x(N);
  for (int j = 1; j < n; ++j) {
    const double x2 = j * grid.h();
    for (int i = 0; i <= n; ++i) {
      const double x1 = i * grid.h();
      x[uidx(i, j)] = x1 * (1.0 - x2) + (1.0 - x1) * x2;
    }
  }

  std::vector<double> r(N), z(N), p(N), Ap(N);
  apply_A(x, Ap);
  double bnorm2 = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    r[k] = rhs[k] - Ap[k];
    bnorm2 += rhs[k] * rhs[k];
  }
  const double target2 = tol * tol * std::max(bnorm2, 1e-300);

  double rz = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    z[k] = r[k] / diag[k];
    p[k] = z[k];
    rz += r[k] * z[k];
  }

  double rnorm2 = 0.0;
  for (std::size_t k = 0; k < N; ++k) rnorm2 += r[k] * r[k];

  const long max_iter = 30 * static_cast<long>(n + 1) + 200;
  long it = 0;
  while (rnorm2 > target2 && it < max_iter) {
    apply_A(p, Ap);
    double pAp = 0.0;
    for (std::size_t k = 0; k < N; ++k) pAp += p[k] * Ap[k];
    const double alpha = rz / pAp;
    rnorm2 = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
      rnorm2 += r[k] * r[k];
    }
    double rz_new = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      z[k] = r[k] / diag[k];
      rz_new += r[k] * z[k];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < N; ++k) p[k] = z[k] + beta * p[k];
    ++it;
  }
  if (rnorm2 > target2) {
    throw EvalError("darcy_solve: CG did not converge on the " + std::to_string(n) + "x" +
                    std::to_string(n) + " grid; residual " + std::to_string(std::sqrt(rnorm2)) +
                    " vs target " + std::to_string(std::sqrt(target2)));
  }

  HeadField field{grid, std::vector<double>(grid.node_count(), 0.0)};
  for (int i = 0; i <= n; ++i) {
    field.values[grid.index(i, 0)] = dirichlet_bottom(i);
    field.values[grid.index(i, n)] = dirichlet_top(i);
  }
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i <= n; ++i) field.values[grid.index(i, j)] = x[uidx(i, j)];
  }
  validate_head_field(field);
  return field;
}

double interpolate_head(const HeadField& field, double x1, double x2) {
  if (x1 < 0.0 || x1 > 1.0 || x2 < 0.0 || x2 > 1.0) {
    throw InputError("interpolate_head: point outside [0,1]^2");
  }
  const int n = field.grid.n;
  const int i = std::min(static_cast<int>(x1 * n), n - 1);
  const int j = std::min(static_cast<int>(x2 * n), n - 1);
  const double s = x1 * n - i;
  const double t = x2 * n - j;
  return (1 - s) * (1 - t) * field.at(i, j) + s * (1 - t) * field.at(i + 1, j) +
         (1 - s) * t * field.at(i, j + 1) + s * t * field.at(i + 1, j + 1);
}

std::vector<double> make_true_permeability(const PriorLayout& cosine_layout) {
  if (cosine_layout.family() != PriorFamily::KL_COSINE_2D) {
    throw ConfigError("make_true_permeability: expects a cosine-basis layout");
  }
  const auto& meta = cosine_layout.cosine();
  std::vector<double> coords(cosine_layout.param_count(), 0.0);
  std::size_t idx = 0;
  for (int i1 = 1; i1 <= meta.imax1; ++i1) {
    for (int i2 = 1; i2 <= meta.imax2; ++i2, ++idx) {
      if (i1 <= 10 && i2 <= 10) {
        const double phase = (i1 - 0.5) * (i1 - 0.5) + (i2 - 0.5) * (i2 - 0.5);
        coords[idx] = cosine_layout.stddev(idx) * std::sin(phase);
      }
    }
  }
  return coords;
}

DarcyLogLikelihood::DarcyLogLikelihood(std::vector<DarcyObservation> observations,
                                       std::shared_ptr<const FunctionEvaluator> evaluator,
                                       Grid2D grid, double noise_std, double solver_tol)
    : observations_(std::move(observations)),
      evaluator_(std::move(evaluator)),
      grid_(grid),
      noise_std_(noise_std),
      solver_tol_(solver_tol) {
  if (observations_.empty()) throw ConfigError("DarcyLogLikelihood: no observations");
  if (!(noise_std_ > 0.0)) throw ConfigError("DarcyLogLikelihood: noise std must be positive");
  for (const auto& obs : observations_) {
    if (obs.x1 < 0.0 || obs.x1 > 1.0 || obs.x2 < 0.0 || obs.x2 > 1.0) {
      throw ConfigError("DarcyLogLikelihood: observation outside [0,1]^2");
    }
  }
  node_points_ = grid_.nodes();
}

std::vector<double> DarcyLogLikelihood::predict(std::span<const double> params) const {
  std::vector<double> u;
  evaluator_->evaluate_batch(params, node_points_, u);
  const HeadField field = darcy_solve(u, grid_, solver_tol_);
  std::vector<double> out(observations_.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = interpolate_head(field, observations_[k].x1, observations_[k].x2);
  }
  return out;
}

double DarcyLogLikelihood::value(std::span<const double> params) const {
  const auto heads = predict(params);
  const double inv_var = 1.0 / (noise_std_ * noise_std_);
  double loglik = 0.0;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const double r = observations_[k].head - heads[k];
    loglik -= 0.5 * r * r * inv_var;
  }
  return loglik;
}

}  // namespace fsmc

#pragma once

#include <memory>
#include <vector>

#include "fsmc/evaluator.hpp"
#include "fsmc/loglik.hpp"
#include "fsmc/prior_layout.hpp"

namespace fsmc {

// Uniform node grid on [0,1]^2 with n cells per axis, (n+1)^2 nodes stored
// row-major (x1 fastest).
struct Grid2D {
  int n = 20;

  explicit Grid2D(int cells);
  int nodes_per_axis() const { return n + 1; }
  std::size_t node_count() const {
    return static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1);
  }
  double h() const { return 1.0 / n; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * (n + 1) + static_cast<std::size_t>(i);
  }
  // all node coordinates, in storage order
  std::vector<std::vector<double>> nodes() const;
};

// Hydraulic head on the grid.  Dirichlet rows carry p = x1 at x2 = 0 and
// p = 1 - x1 at x2 = 1 exactly; interior values obey the discrete maximum
// principle.
struct HeadField {
  Grid2D grid;
  std::vector<double> values;

  double at(int i, int j) const { return values[grid.index(i, j)]; }
};

// asserts the Dirichlet rows and the discrete maximum principle
void validate_head_field(const HeadField& field);

// Solves -div(exp(u) grad p) = 0 with the mixed boundary conditions above:
// conservative 5-point finite volumes with harmonic face averaging of
// exp(u), homogeneous Neumann on x1 in {0,1}, Jacobi-preconditioned CG to
// relative residual tol.  Throws EvalError (with the residual attached) if
// the iteration cap is exceeded.
HeadField darcy_solve(const std::vector<double>& u_nodes, const Grid2D& grid, double tol = 1e-10);

// bilinear interpolation from the surrounding nodes
double interpolate_head(const HeadField& field, double x1, double x2);

// Coefficients of the reference log-permeability on a cosine-basis layout:
// u*_i = lambda_i sin((i1-1/2)^2 + (i2-1/2)^2) for 1 <= i1,i2 <= 10, else 0.
std::vector<double> make_true_permeability(const PriorLayout& cosine_layout);

struct DarcyObservation {
  double x1 = 0.0;
  double x2 = 0.0;
  double head = 0.0;
};

// Gaussian likelihood of head observations under the forward solve with
// permeability exp(u(.)); the prior acts on the log-permeability.
class DarcyLogLikelihood final : public LogLikelihood {
 public:
  DarcyLogLikelihood(std::vector<DarcyObservation> observations,
                     std::shared_ptr<const FunctionEvaluator> evaluator, Grid2D grid,
                     double noise_std = 0.01, double solver_tol = 1e-10);

  double value(std::span<const double> params) const override;

  // head at the observation points for a given parameter vector (used for
  // posterior-predictive output)
  std::vector<double> predict(std::span<const double> params) const;

 private:
  std::vector<DarcyObservation> observations_;
  std::shared_ptr<const FunctionEvaluator> evaluator_;
  Grid2D grid_;
  double noise_std_;
  double solver_tol_;
  std::vector<std::vector<double>> node_points_;
};

}  // namespace fsmc

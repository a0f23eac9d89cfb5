#pragma once

#include <vector>

#include "gaussbound/common.hpp"
#include "gaussbound/gib.hpp"
#include "gaussbound/models.hpp"

namespace gaussbound {

/// Joint pmf of two finite alphabets; rows index x, columns index y.
struct JointPmf {
  Matrix p;
  Matrix x_nodes;  // |X| x d_x support points (labels)
  Matrix y_nodes;  // |Y| x d_y
  bool quantile_fallback = false;

  /// Normalizes, drops all-zero rows/columns, and fills default labels.
  static JointPmf from_matrix(Matrix p, Matrix x_nodes = {}, Matrix y_nodes = {});
  void validate() const;
  [[nodiscard]] Vector px() const { return p.rowwise().sum(); }
  [[nodiscard]] Vector py() const { return p.colwise().sum().transpose(); }
};

/// Plug-in mutual information of the pmf, nats.
double discrete_mi(const JointPmf& joint);

struct IBSolution {
  Matrix q_t_given_x;  // |X| x |T|
  Vector q_t;
  Matrix q_y_given_t;  // |T| x |Y|
  double beta = 0.0;
  double itx = 0.0;
  double ity = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> lagrangian;  // I_TX - beta I_TY after every update
};

/// Self-consistent IB iterations from `init` (identity q(t|x) when null).
IBSolution ib_iterate(const JointPmf& joint, double beta, const IBSolution* init = nullptr, double tol = 1e-10,
                      int max_iter = 20000);

/// Descending schedule, 60 log-spaced values from 200 down to 0.8.
std::vector<double> default_anneal_schedule(int count = 60, double hi = 200.0, double lo = 0.8);

/// Warm-started sweep over a strictly descending beta schedule. Points are
/// returned in ascending beta; concavity violations above 1e-6 are replaced
/// by the upper concave envelope with the raw points kept in `raw`.
IBCurve reverse_anneal(const JointPmf& joint, const std::vector<double>& schedule, double tol = 1e-10,
                       int max_iter = 20000);

/// Gauss-Hermite nodes and weights for the standard normal weight function.
void gauss_hermite(int m, std::vector<double>& nodes, std::vector<double>& weights);

/// Discretizes an analytic model on a product grid with m nodes per
/// dimension (mixture components get m nodes each). Families without a
/// Gaussian-like marginal use equal-probability quantile bins and set
/// quantile_fallback.
JointPmf quadrature_discretize(const ModelSpec& spec, int m);

/// Equal-probability rank bins of paired samples (1-D columns).
JointPmf empirical_pmf(VectorRef x, VectorRef y, int bins);

}  // namespace gaussbound

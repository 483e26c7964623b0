#pragma once

#include <Eigen/Dense>
#include <string>

#include "weightlab/haar.hpp"
#include "weightlab/kernels.hpp"

namespace weightlab {

// K(x_i, y_j) for target atoms x_i (rows) and source atoms y_j (columns).
// Vector kernels stack one block of rows per component.
Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const AtomicMeasure& target, const AtomicMeasure& source,
                              int threads = 1);

// sqrt(omega_i) K(x_i, y_j) sqrt(sigma_j): the matrix of f -> T(f sigma) from
// L2(sigma) to L2(omega) in orthonormal coordinates.
Eigen::MatrixXd operator_matrix(const KernelSpec& k, const AtomicMeasure& sigma, const AtomicMeasure& omega,
                                int threads = 1);

struct NormOptions {
  std::string method = "auto";  // auto | dense | power
  Eigen::Index dense_limit = 512;
  double rel_tol = 1e-10;
  int max_iter = 10000;
  std::uint64_t seed = 1;
};

struct NormResult {
  double value = 0.0;
  std::string method;
  bool converged = true;
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
};

NormResult matrix_norm(const Eigen::MatrixXd& a, const NormOptions& opt = {});
NormResult operator_norm(const KernelSpec& k, const AtomicMeasure& sigma, const AtomicMeasure& omega,
                         const NormOptions& opt = {}, int threads = 1);

// T(f sigma) at the atoms of omega; components() values per atom, component-major.
std::vector<double> apply(const KernelSpec& k, const AtomicMeasure& sigma, const MuFunction& f,
                          const AtomicMeasure& omega);

// <T(f sigma), g>_omega for a scalar kernel.
double bilinear(const KernelSpec& k, const AtomicMeasure& sigma, const AtomicMeasure& omega, const MuFunction& f,
                const MuFunction& g);

struct GoodSplit {
  MuFunction good;
  MuFunction bad;
  bool grid_bad = false;
  bool vacuous = false;
};

// Good part: differences over good cubes of the basis grid, or zero if the
// grid is Q-bad. Bad part: f minus the good part.
GoodSplit good_projection(const Cube& q, const HaarBasis& b, const MuFunction& f, const GoodnessParams& p);

struct Forms {
  double B = 0.0;  // all pairs of differences
  double C = 0.0;  // r-close pairs
  double S = 0.0;  // r-close pairs in absolute value
  std::size_t close_pairs = 0;
};

// Both bases must use the same grid; the kernel must be scalar.
Forms forms_bcs(const KernelSpec& k, const HaarBasis& sigma_basis, const HaarBasis& omega_basis, const MuFunction& f,
                const MuFunction& g, const GoodnessParams& p);

}  // namespace weightlab

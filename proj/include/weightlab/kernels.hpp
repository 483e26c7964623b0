#pragma once

#include <cstddef>
#include <cstdint>

#include "weightlab/measures.hpp"

namespace weightlab {

enum class Truncation { none, tangent };

inline constexpr int kVectorKernel = -1;

// Riesz-type kernel w_c / |w|^{dim + 1 - alpha}, optionally with the
// tangent-line truncation of the radial profile at delta and R.
struct KernelSpec {
  int dim = 1;
  double alpha = 0.0;
  int component = 0;  // kVectorKernel for all components
  Truncation truncation = Truncation::tangent;
  double delta = 0.5;
  double R = 1.0;

  void validate() const;
  int components() const { return component == kVectorKernel ? dim : 1; }
  // Radial profile: r^{alpha - dim} on [delta, R], tangent lines outside.
  double psi(double r) const;
  // Where the outer tangent line reaches zero.
  double cutoff() const;
  double eval(const double* x, const double* y, int c) const;
  // Writes components() values.
  void eval_all(const double* x, const double* y, double* out) const;
};

double tangent_cutoff(double alpha, int dim, double R);

// delta = half the smallest gap between distinct atoms, R = twice the diameter.
KernelSpec default_kernel(int dim, double alpha, int component, const AtomicMeasure& sigma,
                          const AtomicMeasure& omega);

struct KernelEstimates {
  double size = 0.0;
  double smooth = 0.0;
  double holder = 0.0;
  std::size_t samples = 0;
};

// Empirical size, gradient and Holder constants over random pairs with
// |x - y| in [delta/2, 2R].
KernelEstimates check_kernel_estimates(const KernelSpec& k, std::size_t samples, std::uint64_t seed,
                                       double holder_exponent = 1.0);

struct SeamGaps {
  double at_delta = 0.0;
  double at_R = 0.0;
};

// Relative gap between one-sided derivatives of psi at the two seams.
SeamGaps seam_derivative_gaps(const KernelSpec& k);

}  // namespace weightlab

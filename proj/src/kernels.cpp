#include "weightlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "weightlab/util.hpp"

namespace weightlab {

void KernelSpec::validate() const {
  check_dim(dim);
  if (!(alpha >= 0.0 && alpha < dim)) throw ValidationError("alpha must lie in [0, dim)");
  if (component != kVectorKernel && (component < 0 || component >= dim)) {
    throw ValidationError("kernel component out of range");
  }
  if (truncation == Truncation::tangent) {
    if (!(delta > 0.0 && delta < R) || !std::isfinite(R)) throw ValidationError("truncation needs 0 < delta < R");
  }
}

double tangent_cutoff(double alpha, int dim, double R) {
  double p = dim - alpha;
  return R * (p + 1.0) / p;
}

double KernelSpec::cutoff() const { return tangent_cutoff(alpha, dim, R); }

double KernelSpec::psi(double r) const {
  if (!(r > 0.0)) return 0.0;
  double p = dim - alpha;
  if (truncation == Truncation::none) return std::pow(r, -p);
  if (r < delta) {
    double f = std::pow(delta, -p);
    return f - p * f / delta * (r - delta);
  }
  if (r <= R) return std::pow(r, -p);
  if (r < cutoff()) {
    double f = std::pow(R, -p);
    return f - p * f / R * (r - R);
  }
  return 0.0;
}

double KernelSpec::eval(const double* x, const double* y, int c) const {
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    double d = x[k] - y[k];
    r2 += d * d;
  }
  if (r2 == 0.0) return 0.0;
  double r = std::sqrt(r2);
  return (x[c] - y[c]) / r * psi(r);
}

void KernelSpec::eval_all(const double* x, const double* y, double* out) const {
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    double d = x[k] - y[k];
    r2 += d * d;
  }
  int m = components();
  if (r2 == 0.0) {
    std::fill(out, out + m, 0.0);
    return;
  }
  double r = std::sqrt(r2);
  double s = psi(r) / r;
  if (component == kVectorKernel) {
    for (int k = 0; k < dim; ++k) out[k] = (x[k] - y[k]) * s;
  } else {
    out[0] = (x[component] - y[component]) * s;
  }
}

KernelSpec default_kernel(int dim, double alpha, int component, const AtomicMeasure& sigma,
                          const AtomicMeasure& omega) {
  KernelSpec k;
  k.dim = dim;
  k.alpha = alpha;
  k.component = component;
  k.truncation = Truncation::tangent;
  std::vector<const double*> pts;
  for (std::size_t i = 0; i < sigma.size(); ++i) pts.push_back(sigma.coord(i));
  for (std::size_t i = 0; i < omega.size(); ++i) pts.push_back(omega.coord(i));
  double min_gap = std::numeric_limits<double>::infinity(), diam = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double r2 = 0.0;
      for (int c = 0; c < dim; ++c) r2 += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
      double r = std::sqrt(r2);
      if (r > 0.0) min_gap = std::min(min_gap, r);
      diam = std::max(diam, r);
    }
  }
  if (!std::isfinite(min_gap)) {
    k.delta = 0.5;
    k.R = 1.0;
  } else {
    k.delta = 0.5 * min_gap;
    k.R = 2.0 * diam;
  }
  k.validate();
  return k;
}

namespace {

void gradient(const KernelSpec& k, const double* x, const double* y, double r, double* grad) {
  int m = k.components();
  double h = 1e-6 * r;
  double xp[kMaxDim], vp[kMaxDim], vm[kMaxDim];
  for (int d = 0; d < k.dim; ++d) {
    std::copy(x, x + k.dim, xp);
    xp[d] = x[d] + h;
    k.eval_all(xp, y, vp);
    xp[d] = x[d] - h;
    k.eval_all(xp, y, vm);
    for (int c = 0; c < m; ++c) grad[c * k.dim + d] = (vp[c] - vm[c]) / (2 * h);
  }
}

double norm(const double* v, int len) {
  double s = 0.0;
  for (int i = 0; i < len; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

}  // namespace

KernelEstimates check_kernel_estimates(const KernelSpec& k, std::size_t samples, std::uint64_t seed,
                                       double holder_exponent) {
  k.validate();
  Rng rng(seed);
  KernelEstimates out;
  int n = k.dim, m = k.components();
  double lo = k.truncation == Truncation::tangent ? 0.5 * k.delta : 1e-3;
  double hi = k.truncation == Truncation::tangent ? 2.0 * k.R : 1.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double x[kMaxDim], y[kMaxDim], u[kMaxDim], x2[kMaxDim];
    double un = 0.0;
    do {
      un = 0.0;
      for (int d = 0; d < n; ++d) {
        u[d] = 2.0 * uniform01(rng) - 1.0;
        un += u[d] * u[d];
      }
    } while (un < 1e-4 || un > 1.0);
    un = std::sqrt(un);
    double r = lo * std::pow(hi / lo, uniform01(rng));
    for (int d = 0; d < n; ++d) {
      x[d] = uniform01(rng);
      y[d] = x[d] - r * u[d] / un;
    }
    double val[kMaxDim];
    k.eval_all(x, y, val);
    double scale = std::pow(r, k.alpha - n);
    out.size = std::max(out.size, norm(val, m) / scale);
    double g1[kMaxDim * kMaxDim], g2[kMaxDim * kMaxDim];
    gradient(k, x, y, r, g1);
    out.smooth = std::max(out.smooth, norm(g1, m * n) / (scale / r));
    double t = 0.5 * r * (0.01 + 0.99 * uniform01(rng));
    double v[kMaxDim], vn = 0.0;
    for (int d = 0; d < n; ++d) {
      v[d] = uniform01(rng) - 0.5;
      vn += v[d] * v[d];
    }
    vn = std::sqrt(std::max(vn, 1e-12));
    for (int d = 0; d < n; ++d) x2[d] = x[d] + t * v[d] / vn;
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += (x2[d] - y[d]) * (x2[d] - y[d]);
    gradient(k, x2, y, std::sqrt(r2), g2);
    double diff[kMaxDim * kMaxDim];
    for (int i = 0; i < m * n; ++i) diff[i] = g1[i] - g2[i];
    double denom = std::pow(t / r, holder_exponent) * scale / r;
    out.holder = std::max(out.holder, norm(diff, m * n) / denom);
    ++out.samples;
  }
  return out;
}

SeamGaps seam_derivative_gaps(const KernelSpec& k) {
  k.validate();
  auto left = [&](double a) {
    double h = 1e-4 * a;
    return (3 * k.psi(a) - 4 * k.psi(a - h) + k.psi(a - 2 * h)) / (2 * h);
  };
  auto right = [&](double a) {
    double h = 1e-4 * a;
    return (-3 * k.psi(a) + 4 * k.psi(a + h) - k.psi(a + 2 * h)) / (2 * h);
  };
  auto gap = [&](double a) {
    double l = left(a), r = right(a);
    return std::fabs(l - r) / std::max(1.0, std::max(std::fabs(l), std::fabs(r)));
  };
  SeamGaps g;
  if (k.truncation == Truncation::tangent) {
    g.at_delta = gap(k.delta);
    g.at_R = gap(k.R);
  }
  return g;
}

}  // namespace weightlab

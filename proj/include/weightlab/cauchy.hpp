#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "weightlab/dyadic.hpp"

namespace weightlab {

// Graph curve x -> x + i A(x).
struct CurveSpec {
  enum class Family { zero, linear, sine, poly };

  Family family = Family::zero;
  double slope = 0.0;           // linear: A(x) = slope x
  double amp = 0.0, freq = 1.0;  // sine: A(x) = amp sin(freq x)
  std::vector<double> coeffs;    // poly: A(x) = sum coeffs[k] x^k

  static CurveSpec zero() { return {}; }
  static CurveSpec linear(double a);
  static CurveSpec sine(double amp, double freq);
  static CurveSpec poly(std::vector<double> c);

  void validate() const;
  double A(double x) const;
  double dA(double x) const;
  // A(x + h) - A(x) without cancellation for small h.
  double chord(double x, double h) const;
  std::string family_name() const;
};

nlohmann::ordered_json curve_to_json(const CurveSpec& c);
CurveSpec curve_from_json(const nlohmann::json& j);

enum class Branch {
  principal,  // principal logarithm of the ratio
  tracked,    // argument kept in (0, 2 pi), continuous along I for flat curves
  pv,         // principal value: the tracked value minus i pi
};

// Cauchy integral of 1_I b along the curve, evaluated at x in (a, b) or outside I.
std::complex<double> cauchy_indicator(const CurveSpec& c, double a, double b, double x,
                                      Branch branch = Branch::principal);

// b(x) = 1 + i A'(x).
std::complex<double> accretive_b(const CurveSpec& c, double x);

struct Accretivity {
  double lower = 0.0;  // min Re b
  double upper = 0.0;  // max |b|
};

Accretivity accretivity_bounds(const CurveSpec& c, double a, double b, int grid_pts);

struct QuadratureOptions {
  int panels = 64;
  double rel_tol = 1e-13;
  int threads = 1;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

// Composite tanh-sinh rule over equal panels. f(x, d) receives the signed
// distance d from x to the nearest panel end (negative near the left end), so
// endpoint singularities can be evaluated without cancellation.
QuadratureResult integrate(const std::function<double(double, double)>& f, double a, double b,
                           const QuadratureOptions& opt = {});

// (1/|I|) * integral over I of |C(1_I b)|^2.
QuadratureResult b_testing_ratio(const CurveSpec& c, double a, double b, const QuadratureOptions& opt = {},
                                 Branch branch = Branch::tracked);

// Integral of ln(w)^2 over (0, 1), the comparison value 2.
QuadratureResult log_square_integral(const QuadratureOptions& opt = {});

// Same ratio with Lebesgue measure on I replaced by 2^level equal atoms at the
// cell centres and the diagonal term dropped. Approximates the pv ratio.
double discrete_testing_ratio(const CurveSpec& c, double a, double b, int level, int threads = 1);

struct CauchyConfig {
  CurveSpec curve;
  double a = 0.0, b = 1.0;
  QuadratureOptions quadrature;
  int accretivity_pts = 1024;
  int discrete_level = 10;  // 0 skips the atomic check

  void validate() const;
};

CauchyConfig cauchy_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json cauchy_config_to_json(const CauchyConfig& c);

// Ratios on every branch, the comparison integral, accretivity bounds and the atomic check.
nlohmann::ordered_json cauchy_report(const CauchyConfig& c);

}  // namespace weightlab

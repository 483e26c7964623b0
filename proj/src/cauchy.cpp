#include "weightlab/cauchy.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "weightlab/kernels.hpp"
#include "weightlab/measures.hpp"
#include "weightlab/operators.hpp"
#include "weightlab/util.hpp"

namespace weightlab {

using cplx = std::complex<double>;

CurveSpec CurveSpec::linear(double a) {
  CurveSpec c;
  c.family = Family::linear;
  c.slope = a;
  return c;
}

CurveSpec CurveSpec::sine(double amp, double freq) {
  CurveSpec c;
  c.family = Family::sine;
  c.amp = amp;
  c.freq = freq;
  return c;
}

CurveSpec CurveSpec::poly(std::vector<double> coeffs) {
  CurveSpec c;
  c.family = Family::poly;
  c.coeffs = std::move(coeffs);
  return c;
}

void CurveSpec::validate() const {
  auto finite = [](double v, const char* what) {
    if (!std::isfinite(v)) throw ValidationError(std::string("curve ") + what + " must be finite");
  };
  finite(slope, "slope");
  finite(amp, "amplitude");
  finite(freq, "frequency");
  for (double v : coeffs) finite(v, "coefficient");
}

double CurveSpec::A(double x) const {
  switch (family) {
    case Family::zero:
      return 0.0;
    case Family::linear:
      return slope * x;
    case Family::sine:
      return amp * std::sin(freq * x);
    case Family::poly: {
      double v = 0.0;
      for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
      return v;
    }
  }
  return 0.0;
}

double CurveSpec::dA(double x) const {
  switch (family) {
    case Family::zero:
      return 0.0;
    case Family::linear:
      return slope;
    case Family::sine:
      return amp * freq * std::cos(freq * x);
    case Family::poly: {
      double v = 0.0;
      for (std::size_t k = coeffs.size(); k-- > 1;) v = v * x + static_cast<double>(k) * coeffs[k];
      return v;
    }
  }
  return 0.0;
}

double CurveSpec::chord(double x, double h) const {
  switch (family) {
    case Family::zero:
      return 0.0;
    case Family::linear:
      return slope * h;
    case Family::sine:
      return 2.0 * amp * std::cos(freq * (x + h / 2)) * std::sin(freq * h / 2);
    case Family::poly: {
      // (y^k - x^k) / (y - x) = sum_{m<k} x^m y^(k-1-m)
      double y = x + h, q = 0.0;
      for (std::size_t k = 1; k < coeffs.size(); ++k) {
        double s = 0.0, xm = 1.0;
        for (std::size_t m = 0; m < k; ++m) {
          s += xm * std::pow(y, static_cast<double>(k - 1 - m));
          xm *= x;
        }
        q += coeffs[k] * s;
      }
      return q * h;
    }
  }
  return 0.0;
}

std::string CurveSpec::family_name() const {
  switch (family) {
    case Family::zero:
      return "zero";
    case Family::linear:
      return "linear";
    case Family::sine:
      return "sine";
    case Family::poly:
      return "poly";
  }
  return "zero";
}

nlohmann::ordered_json curve_to_json(const CurveSpec& c) {
  nlohmann::ordered_json j;
  j["family"] = c.family_name();
  if (c.family == CurveSpec::Family::linear) j["slope"] = c.slope;
  if (c.family == CurveSpec::Family::sine) {
    j["amp"] = c.amp;
    j["freq"] = c.freq;
  }
  if (c.family == CurveSpec::Family::poly) j["coeffs"] = c.coeffs;
  return j;
}

CurveSpec curve_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("curve must be an object");
  CurveSpec c;
  try {
    std::string f = j.value("family", std::string("zero"));
    if (f == "zero") {
      c = CurveSpec::zero();
    } else if (f == "linear") {
      c = CurveSpec::linear(j.value("slope", 0.0));
    } else if (f == "sine") {
      c = CurveSpec::sine(j.value("amp", 0.0), j.value("freq", 1.0));
    } else if (f == "poly") {
      c = CurveSpec::poly(j.value("coeffs", std::vector<double>{}));
    } else {
      throw ValidationError("unknown curve family '" + f + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad curve: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

void check_interval(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) throw ValidationError("interval needs finite a < b");
}

// x = a + da = b - db with da, db > 0 both exact.
cplx inside_value(const CurveSpec& c, double a, double b, double da, double db, Branch branch) {
  // -w = (x - a + i(A(x) - A(a))) / (b - x - i(A(x) - A(b)))
  cplx num(da, c.chord(a, da));
  cplx den(db, -c.chord(b, -db));
  cplx lg = std::log(num / den);
  switch (branch) {
    case Branch::pv:
      return lg;
    case Branch::tracked:
      return lg + cplx(0.0, std::numbers::pi);
    case Branch::principal:
      return lg + cplx(0.0, lg.imag() <= 0.0 ? std::numbers::pi : -std::numbers::pi);
  }
  return lg;
}

boost::math::quadrature::tanh_sinh<double>& rule() {
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  return ts;
}

}  // namespace

cplx cauchy_indicator(const CurveSpec& c, double a, double b, double x, Branch branch) {
  check_interval(a, b);
  if (!std::isfinite(x)) throw ValidationError("evaluation point must be finite");
  if (x == a || x == b) throw ValidationError("evaluation point at an endpoint of I");
  if (x > a && x < b) return inside_value(c, a, b, x - a, b - x, branch);
  cplx num(x - a, c.chord(a, x - a));
  cplx den(x - b, c.chord(b, x - b));
  return std::log(num / den);
}

cplx accretive_b(const CurveSpec& c, double x) { return {1.0, c.dA(x)}; }

Accretivity accretivity_bounds(const CurveSpec& c, double a, double b, int grid_pts) {
  check_interval(a, b);
  if (grid_pts < 2) throw ValidationError("accretivity grid needs at least 2 points");
  Accretivity out{1.0, 1.0};
  for (int k = 0; k < grid_pts; ++k) {
    double x = a + (b - a) * k / (grid_pts - 1);
    cplx v = accretive_b(c, x);
    out.lower = std::min(out.lower, v.real());
    out.upper = std::max(out.upper, std::abs(v));
  }
  return out;
}

QuadratureResult integrate(const std::function<double(double, double)>& f, double a, double b,
                           const QuadratureOptions& opt) {
  check_interval(a, b);
  if (opt.panels < 1) throw ValidationError("quadrature needs at least one panel");
  if (!(opt.rel_tol > 0.0)) throw ValidationError("quadrature tolerance must be positive");
  std::size_t n = static_cast<std::size_t>(opt.panels);
  double len = b - a;
  std::vector<double> values(n), errors(n), l1s(n);
  parallel_for(n, resolve_threads(opt.threads), [&](std::size_t k) {
    double p0 = a + len * static_cast<double>(k) / static_cast<double>(n);
    double p1 = k + 1 == n ? b : a + len * static_cast<double>(k + 1) / static_cast<double>(n);
    double width = p1 - p0, lead = p0 - a, trail = b - p1;
    auto g = [&](double, double xc) {
      // xc is p0 - x near the left end and p1 - x near the right end
      double left = xc < 0 ? lead - xc : lead + (width - xc);
      double right = xc < 0 ? trail + (width + xc) : trail + xc;
      double xx = left <= right ? a + left : b - right;
      return f(xx, left <= right ? -left : right);
    };
    double err = 0.0, l1 = 0.0;
    values[k] = rule().integrate(g, p0, p1, opt.rel_tol, &err, &l1);
    errors[k] = err;
    l1s[k] = l1;
  });
  QuadratureResult res;
  res.panels = opt.panels;
  Accumulator v, e, l;
  for (std::size_t k = 0; k < n; ++k) {
    v += values[k];
    e += errors[k];
    l += l1s[k];
  }
  res.value = v.value();
  res.error = e.value();
  if (!std::isfinite(res.value) || res.error > 1e-9 * std::max(1.0, l.value())) {
    throw NumericalError("quadrature did not converge (error estimate " + std::to_string(res.error) + ")");
  }
  return res;
}

QuadratureResult b_testing_ratio(const CurveSpec& c, double a, double b, const QuadratureOptions& opt,
                                 Branch branch) {
  c.validate();
  check_interval(a, b);
  if (opt.panels < 64) throw ValidationError("b testing quadrature needs at least 64 panels");
  double len = b - a;
  QuadratureResult r = integrate(
      [&](double, double d) {
        double da = d < 0 ? -d : len - d;
        double db = d < 0 ? len + d : d;
        return std::norm(inside_value(c, a, b, da, db, branch));
      },
      a, b, opt);
  r.value /= len;
  r.error /= len;
  return r;
}

QuadratureResult log_square_integral(const QuadratureOptions& opt) {
  return integrate(
      [](double x, double d) {
        double lx = std::log(d < 0 ? -d : x);
        return lx * lx;
      },
      0.0, 1.0, opt);
}

double discrete_testing_ratio(const CurveSpec& c, double a, double b, int level, int threads) {
  c.validate();
  check_interval(a, b);
  if (level < 1 || level > 14) throw ValidationError("discrete level must lie in [1, 14]");
  std::size_t n = std::size_t{1} << level;
  std::vector<double> sq(n);
  if (c.family == CurveSpec::Family::zero) {
    // flat case is dilation invariant: the Hilbert kernel on the unit lattice
    GeneratorParams g;
    g.kind = "lattice";
    g.level = level;
    AtomicMeasure lat = generate(g);
    KernelSpec k;
    k.truncation = Truncation::none;
    std::vector<double> t = apply(k, lat, MuFunction(n, 1.0), lat);
    for (std::size_t i = 0; i < n; ++i) sq[i] = t[i] * t[i];
  } else {
    double h = (b - a) / static_cast<double>(n);
    std::vector<cplx> z(n), wb(n);
    for (std::size_t j = 0; j < n; ++j) {
      double y = a + (static_cast<double>(j) + 0.5) * h;
      z[j] = cplx(y, c.A(y));
      wb[j] = accretive_b(c, y) * h;
    }
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
      cplx s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) s += wb[j] / (z[i] - z[j]);
      }
      sq[i] = std::norm(s);
    });
  }
  Accumulator acc;
  for (double v : sq) acc += v;
  return acc.value() / static_cast<double>(n);
}

void CauchyConfig::validate() const {
  curve.validate();
  check_interval(a, b);
  if (quadrature.panels < 64) throw ValidationError("quadrature needs at least 64 panels");
  if (accretivity_pts < 2) throw ValidationError("accretivity grid needs at least 2 points");
  if (discrete_level < 0 || discrete_level > 14) throw ValidationError("discrete level must lie in [0, 14]");
}

CauchyConfig cauchy_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("cauchy config must be an object");
  CauchyConfig c;
  try {
    if (j.contains("curve")) c.curve = curve_from_json(j["curve"]);
    if (j.contains("interval")) {
      auto iv = j["interval"].get<std::vector<double>>();
      if (iv.size() != 2) throw ValidationError("interval must have two endpoints");
      c.a = iv[0];
      c.b = iv[1];
    }
    c.quadrature.panels = j.value("panels", c.quadrature.panels);
    c.quadrature.rel_tol = j.value("rel_tol", c.quadrature.rel_tol);
    c.quadrature.threads = j.value("threads", c.quadrature.threads);
    c.accretivity_pts = j.value("accretivity_pts", c.accretivity_pts);
    c.discrete_level = j.value("discrete_level", c.discrete_level);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad cauchy config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json cauchy_config_to_json(const CauchyConfig& c) {
  nlohmann::ordered_json j;
  j["curve"] = curve_to_json(c.curve);
  j["interval"] = {c.a, c.b};
  j["panels"] = c.quadrature.panels;
  j["rel_tol"] = c.quadrature.rel_tol;
  j["accretivity_pts"] = c.accretivity_pts;
  j["discrete_level"] = c.discrete_level;
  return j;
}

nlohmann::ordered_json cauchy_report(const CauchyConfig& c) {
  c.validate();
  QuadratureResult tracked = b_testing_ratio(c.curve, c.a, c.b, c.quadrature, Branch::tracked);
  QuadratureResult principal = b_testing_ratio(c.curve, c.a, c.b, c.quadrature, Branch::principal);
  QuadratureResult pv = b_testing_ratio(c.curve, c.a, c.b, c.quadrature, Branch::pv);
  QuadratureResult cmp = log_square_integral(c.quadrature);
  Accretivity acc = accretivity_bounds(c.curve, c.a, c.b, c.accretivity_pts);

  nlohmann::ordered_json j;
  j["config"] = cauchy_config_to_json(c);
  j["ratio"] = tracked.value;
  j["ratio_error"] = tracked.error;
  j["ratio_principal"] = principal.value;
  j["ratio_pv"] = pv.value;
  j["comparison"] = cmp.value;
  j["comparison_exact"] = 2.0;
  j["accretivity"] = {{"c_b", acc.lower}, {"C_b", acc.upper}};
  if (c.discrete_level > 0) {
    double d = discrete_testing_ratio(c.curve, c.a, c.b, c.discrete_level, c.quadrature.threads);
    j["discrete"] = {{"level", c.discrete_level}, {"ratio", d}, {"relative_gap", std::fabs(d - pv.value) / pv.value}};
  }
  return j;
}

}  // namespace weightlab

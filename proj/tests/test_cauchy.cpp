#include <cmath>
#include <numbers>

#include "doctest.h"
#include "weightlab/cauchy.hpp"

using namespace weightlab;

namespace {

constexpr double pi = std::numbers::pi;

// integral over (0, 1) of ln^2(t / (1 - t)): by symmetry twice the half
// interval, with t = e^-s and composite Simpson in s
double flat_log_oracle() {
  const double lo = std::log(2.0), hi = 60.0;
  const int n = 400000;
  const double h = (hi - lo) / n;
  auto g = [](double s) {
    double l = s + std::log1p(-std::exp(-s));
    return l * l * std::exp(-s);
  };
  double sum = g(lo) + g(hi);
  for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * g(lo + k * h);
  return 2.0 * sum * h / 3.0;
}

}  // namespace

TEST_CASE("indicator transform of a flat interval") {
  CurveSpec z;
  std::complex<double> mid = cauchy_indicator(z, 0.0, 1.0, 0.5);
  CHECK(std::fabs(mid.real()) <= 1e-15);
  CHECK(mid.imag() == doctest::Approx(pi).epsilon(1e-15));
  std::complex<double> q = cauchy_indicator(z, 0.0, 1.0, 0.25);
  CHECK(q.real() == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-15));
  CHECK(q.imag() == doctest::Approx(pi).epsilon(1e-15));
  for (double t : {0.01, 0.1, 0.3, 0.45}) {
    CHECK(std::abs(cauchy_indicator(z, 2.0, 5.0, 2.0 + t)) ==
          doctest::Approx(std::abs(cauchy_indicator(z, 2.0, 5.0, 5.0 - t))).epsilon(1e-13));
  }
  CHECK(cauchy_indicator(z, 0.0, 1.0, 0.25, Branch::pv) == q - std::complex<double>(0.0, pi));
  CHECK(cauchy_indicator(z, 0.0, 1.0, 0.25, Branch::tracked) == q);
  std::complex<double> out = cauchy_indicator(z, 0.0, 1.0, 3.0);
  CHECK(out.real() == doctest::Approx(std::log(1.5)).epsilon(1e-15));
  CHECK(out.imag() == 0.0);
  CHECK_THROWS_AS(cauchy_indicator(z, 0.0, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(cauchy_indicator(z, 1.0, 0.0, 0.5), ValidationError);
}

TEST_CASE("indicator transform matches the log of the displayed ratio") {
  CurveSpec s = CurveSpec::sine(0.3, 2.0);
  for (double x : {0.1, 0.4, 0.77}) {
    std::complex<double> w((x - 0.0) + 0.0, s.A(x) - s.A(0.0));
    w /= std::complex<double>(x - 1.0, s.A(x) - s.A(1.0));
    CHECK(std::abs(cauchy_indicator(s, 0.0, 1.0, x) - std::log(w)) <= 1e-14);
    // tracked and principal agree in modulus up to the sign of pi
    double tr = std::abs(cauchy_indicator(s, 0.0, 1.0, x, Branch::tracked));
    double pr = std::abs(cauchy_indicator(s, 0.0, 1.0, x, Branch::principal));
    double pv = std::imag(cauchy_indicator(s, 0.0, 1.0, x, Branch::pv));
    CHECK(tr * tr - pr * pr == doctest::Approx(pv > 0 ? 4 * pi * pv : 0.0).epsilon(1e-9).scale(1e-9));
  }
}

TEST_CASE("chords without cancellation") {
  CurveSpec p = CurveSpec::poly({0.5, -1.0, 2.0, 0.25});
  CurveSpec s = CurveSpec::sine(0.2, 3.0);
  for (double x : {-1.0, 0.3, 2.0}) {
    for (double h : {0.5, -0.25, 1e-3}) {
      CHECK(p.chord(x, h) == doctest::Approx(p.A(x + h) - p.A(x)).epsilon(1e-12));
      CHECK(s.chord(x, h) == doctest::Approx(s.A(x + h) - s.A(x)).epsilon(1e-12));
    }
    CHECK(p.chord(x, 1e-30) == doctest::Approx(p.dA(x) * 1e-30).epsilon(1e-12));
    CHECK(s.chord(x, 1e-30) == doctest::Approx(s.dA(x) * 1e-30).epsilon(1e-12));
  }
  CHECK(p.dA(2.0) == doctest::Approx(-1.0 + 8.0 + 3.0).epsilon(1e-15));
}

TEST_CASE("accretivity bounds") {
  Accretivity z = accretivity_bounds(CurveSpec::zero(), 0.0, 1.0, 64);
  CHECK(z.lower == 1.0);
  CHECK(z.upper == 1.0);
  CHECK(accretive_b(CurveSpec::linear(1.0), 0.3) == std::complex<double>(1.0, 1.0));
  Accretivity l = accretivity_bounds(CurveSpec::linear(1.0), 0.0, 1.0, 64);
  CHECK(l.lower == 1.0);
  CHECK(l.upper == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  Accretivity s = accretivity_bounds(CurveSpec::sine(0.1, 1.0), -pi, pi, 1001);
  CHECK(s.lower == 1.0);
  CHECK(s.upper <= std::sqrt(1.01) + 1e-15);
  CHECK(s.upper >= std::sqrt(1.01) - 1e-9);
}

TEST_CASE("comparison integral") {
  QuadratureResult r = log_square_integral();
  CHECK(std::fabs(r.value - 2.0) <= 1e-8);
  QuadratureOptions bad;
  bad.panels = 0;
  CHECK_THROWS_AS(log_square_integral(bad), ValidationError);
}

TEST_CASE("flat ratio against the quadrature oracle") {
  double oracle = flat_log_oracle();
  CHECK(oracle == doctest::Approx(pi * pi / 3).epsilon(1e-10));
  QuadratureResult tr = b_testing_ratio(CurveSpec::zero(), 0.0, 1.0);
  CHECK(std::fabs(tr.value - (oracle + pi * pi)) <= 1e-4 * (oracle + pi * pi));
  QuadratureResult pv = b_testing_ratio(CurveSpec::zero(), 0.0, 1.0, {}, Branch::pv);
  CHECK(std::fabs(pv.value - oracle) <= 1e-4 * oracle);
  QuadratureResult pr = b_testing_ratio(CurveSpec::zero(), 0.0, 1.0, {}, Branch::principal);
  CHECK(pr.value == doctest::Approx(tr.value).epsilon(1e-12));

  for (auto [a, b] : {std::pair{2.0, 2.5}, std::pair{-1.0, 3.0}}) {
    double v = b_testing_ratio(CurveSpec::zero(), a, b).value;
    CHECK(std::fabs(v - tr.value) <= 0.01 * tr.value);
    CHECK(v == doctest::Approx(tr.value).epsilon(1e-9));
  }
  QuadratureOptions few;
  few.panels = 32;
  CHECK_THROWS_AS(b_testing_ratio(CurveSpec::zero(), 0.0, 1.0, few), ValidationError);
}

TEST_CASE("straight lines through the origin do not change the ratio") {
  double flat = b_testing_ratio(CurveSpec::zero(), 0.0, 1.0).value;
  CHECK(b_testing_ratio(CurveSpec::linear(1.0), 0.0, 1.0).value == doctest::Approx(flat).epsilon(1e-10));
  CHECK(b_testing_ratio(CurveSpec::linear(-0.5), 1.0, 3.0).value == doctest::Approx(flat).epsilon(1e-10));
  // the direct atomic sum agrees with the Hilbert kernel path
  double d0 = discrete_testing_ratio(CurveSpec::zero(), 0.0, 1.0, 8);
  CHECK(discrete_testing_ratio(CurveSpec::linear(2.0), 0.0, 1.0, 8) == doctest::Approx(d0).epsilon(1e-11));
  CHECK(discrete_testing_ratio(CurveSpec::poly({0.0}), -2.0, 5.0, 8) == doctest::Approx(d0).epsilon(1e-11));
}

TEST_CASE("atomic discretisation") {
  double pv = b_testing_ratio(CurveSpec::zero(), 0.0, 1.0, {}, Branch::pv).value;
  double prev = 1.0;
  for (int m : {6, 8, 10}) {
    double gap = std::fabs(discrete_testing_ratio(CurveSpec::zero(), 0.0, 1.0, m) - pv) / pv;
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev <= 0.05);
  CurveSpec s = CurveSpec::sine(0.2, 3.0);
  double spv = b_testing_ratio(s, 0.0, 1.0, {}, Branch::pv).value;
  CHECK(std::fabs(discrete_testing_ratio(s, 0.0, 1.0, 10) - spv) <= 0.05 * spv);
  CHECK_THROWS_AS(discrete_testing_ratio(s, 0.0, 1.0, 15), ValidationError);
}

TEST_CASE("small amplitudes approach the flat ratio") {
  double flat = b_testing_ratio(CurveSpec::zero(), 0.0, 1.0).value;
  double prev = INFINITY;
  for (double amp : {0.1, 0.01, 0.001}) {
    double gap = std::fabs(b_testing_ratio(CurveSpec::sine(amp, 1.0), 0.0, 1.0).value - flat);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("threads do not change the ratio") {
  CurveSpec s = CurveSpec::poly({0.0, 0.3, -0.2});
  QuadratureOptions one, four;
  four.threads = 4;
  CHECK(b_testing_ratio(s, 0.0, 2.0, one).value == b_testing_ratio(s, 0.0, 2.0, four).value);
  CHECK(discrete_testing_ratio(s, 0.0, 2.0, 9, 1) == discrete_testing_ratio(s, 0.0, 2.0, 9, 3));
}

TEST_CASE("config json") {
  nlohmann::json j = {{"curve", {{"family", "sine"}, {"amp", 0.1}, {"freq", 2.0}}},
                      {"interval", {0.0, 2.0}},
                      {"discrete_level", 8}};
  CauchyConfig c = cauchy_config_from_json(j);
  CHECK(c.curve.family == CurveSpec::Family::sine);
  CHECK(c.b == 2.0);
  CauchyConfig back = cauchy_config_from_json(nlohmann::json::parse(cauchy_config_to_json(c).dump()));
  CHECK(cauchy_config_to_json(back).dump() == cauchy_config_to_json(c).dump());

  nlohmann::ordered_json rep = cauchy_report(c);
  CHECK(rep["comparison"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep["accretivity"]["c_b"].get<double>() == 1.0);
  CHECK(rep["discrete"]["relative_gap"].get<double>() < 0.05);

  CHECK_THROWS_AS(cauchy_config_from_json({{"curve", {{"family", "spiral"}}}}), ValidationError);
  CHECK_THROWS_AS(cauchy_config_from_json({{"interval", {1.0, 0.0}}}), ValidationError);
  CHECK_THROWS_AS(cauchy_config_from_json({{"interval", {1.0}}}), ValidationError);
  CHECK_THROWS_AS(cauchy_config_from_json({{"panels", "many"}}), ValidationError);
  CHECK_THROWS_AS(cauchy_config_from_json({{"curve", {{"family", "sine"}, {"amp", "big"}}}}), ValidationError);
}

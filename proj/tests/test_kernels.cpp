#include <cmath>

#include "doctest.h"
#include "weightlab/kernels.hpp"
#include "weightlab/util.hpp"

using namespace weightlab;

TEST_CASE("tangent cutoff and radial profile") {
  CHECK(tangent_cutoff(0, 1, 1) == doctest::Approx(2.0));
  CHECK(tangent_cutoff(1, 2, 1) == doctest::Approx(2.0));
  CHECK(tangent_cutoff(0, 2, 1) == doctest::Approx(1.5));
  KernelSpec k;
  k.dim = 1;
  k.alpha = 0;
  k.delta = 0.5;
  k.R = 1.0;
  CHECK(k.psi(0.75) == doctest::Approx(4.0 / 3));
  CHECK(k.psi(1.5) == doctest::Approx(0.5));
  CHECK(k.psi(0.25) == doctest::Approx(3.0));
  CHECK(k.psi(0.0) == 0.0);
  CHECK(k.psi(2.0) == 0.0);
  CHECK(k.psi(5.0) == 0.0);
  double x = 0.75, y = 0.25;
  CHECK(k.eval(&x, &y, 0) == doctest::Approx(2.0));
  CHECK(k.eval(&y, &x, 0) == doctest::Approx(-2.0));
  CHECK(k.eval(&x, &x, 0) == 0.0);
}

TEST_CASE("truncation is continuous with matching one-sided derivatives") {
  for (int dim = 1; dim <= 3; ++dim) {
    for (double alpha : {0.0, 0.5}) {
      KernelSpec k;
      k.dim = dim;
      k.alpha = alpha;
      k.delta = 0.3;
      k.R = 1.7;
      for (double seam : {k.delta, k.R, k.cutoff()}) {
        CHECK(std::fabs(k.psi(seam * (1 - 1e-12)) - k.psi(seam * (1 + 1e-12))) < 1e-9);
      }
      CHECK(k.psi(k.cutoff()) == doctest::Approx(0.0));
      SeamGaps g = seam_derivative_gaps(k);
      CHECK(g.at_delta < 1e-6);
      CHECK(g.at_R < 1e-6);
    }
  }
}

TEST_CASE("kernel estimates stay bounded") {
  KernelSpec raw;
  raw.dim = 1;
  raw.truncation = Truncation::none;
  KernelEstimates e = check_kernel_estimates(raw, 500, 3);
  CHECK(e.size == doctest::Approx(1.0).epsilon(1e-9));
  KernelSpec k;
  k.dim = 2;
  k.alpha = 0.5;
  k.component = kVectorKernel;
  k.delta = 0.1;
  k.R = 2.0;
  KernelEstimates t = check_kernel_estimates(k, 2000, 5);
  CHECK(t.size <= 1.0 + 1e-9);
  CHECK(t.smooth < 10.0);
  CHECK(std::isfinite(t.holder));
}

TEST_CASE("vector kernel stacks components and is odd") {
  KernelSpec k;
  k.dim = 2;
  k.component = kVectorKernel;
  k.delta = 0.1;
  k.R = 3;
  double x[2] = {0.3, 0.9}, y[2] = {0.7, 0.2}, a[2], b[2];
  k.eval_all(x, y, a);
  k.eval_all(y, x, b);
  for (int c = 0; c < 2; ++c) {
    CHECK(a[c] == doctest::Approx(-b[c]));
    CHECK(a[c] == doctest::Approx(k.eval(x, y, c)));
  }
  double r = std::hypot(0.4, 0.7);
  CHECK(a[0] == doctest::Approx(-0.4 / std::pow(r, 3)));
}

TEST_CASE("default truncation uses the atom geometry") {
  auto at = [](double v) { return Atom{Point{1, {snap(v, kTickBits)}}, 1.0}; };
  AtomicMeasure s(1, {at(0.25)}), w(1, {at(0.75)});
  KernelSpec k = default_kernel(1, 0.0, 0, s, w);
  CHECK(k.delta == doctest::Approx(0.25));
  CHECK(k.R == doctest::Approx(1.0));
  CHECK_THROWS_AS([] {
    KernelSpec bad;
    bad.alpha = 1.0;
    bad.validate();
  }(), ValidationError);
}

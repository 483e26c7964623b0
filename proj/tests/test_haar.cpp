#include <cmath>

#include "doctest.h"
#include "weightlab/haar.hpp"
#include "weightlab/util.hpp"

using namespace weightlab;

namespace {

Tick t(double v) { return snap(v, kTickBits); }

AtomicMeasure random_measure(std::uint64_t seed, int dim) {
  GeneratorParams g;
  g.kind = "random_uniform";
  g.dim = dim;
  g.level = dim == 1 ? 8 : 5;
  g.count = 2 + static_cast<int>(seed % 63);
  g.seed = seed;
  g.mass_min = 0.01;
  g.mass_max = 3.0;
  return generate(g);
}

MuFunction random_function(const AtomicMeasure& mu, Rng& rng) {
  MuFunction f(mu.size());
  for (double& v : f) v = 2 * uniform01(rng) - 1;
  return f;
}

}  // namespace

TEST_CASE("two-atom basis has the fixed sign convention") {
  AtomicMeasure mu(1, {{Point{1, {t(0.25)}}, 1.0}, {Point{1, {t(0.75)}}, 3.0}});
  Grid g = standard_grid(1, 10, 0);
  HaarBasis b = build_basis(g, mu, make_cube(1, 0, {0}));
  REQUIRE(b.nodes().size() == 1);
  REQUIRE(b.nodes()[0].funcs.size() == 1);
  CHECK(b.nodes()[0].funcs[0][0] == doctest::Approx(-std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK(b.nodes()[0].funcs[0][1] == doctest::Approx(1 / (2 * std::sqrt(3.0))).epsilon(1e-15));
  MuFunction f{0.0, 1.0};
  CHECK(coeff(b, f, 0, 0) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK(avg(mu, f, make_cube(1, 0, {0})) == doctest::Approx(0.75));
  CHECK(coordinate_energy(mu, make_cube(1, 0, {0})) == doctest::Approx(0.1875).epsilon(1e-15));
}

TEST_CASE("unresolved atoms are rejected") {
  AtomicMeasure mu(1, {{Point{1, {t(0.25)}}, 1.0}, {Point{1, {t(0.2501)}}, 1.0}});
  CHECK_THROWS_AS(build_basis(standard_grid(1, 6, 0), mu, make_cube(1, 0, {0})), ValidationError);
}

TEST_CASE("random bases are orthonormal, complete and telescoping") {
  Rng rng(21);
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    int dim = 1 + static_cast<int>(seed % 2);
    AtomicMeasure mu = random_measure(seed, dim);
    Grid g = sample_grid(dim, dim == 1 ? 10 : 7, 0, seed);
    HaarBasis b = build_basis_all(g, mu);
    std::vector<MuFunction> fs;
    for (std::size_t n = 0; n < b.nodes().size(); ++n)
      for (std::size_t a = 0; a < b.nodes()[n].funcs.size(); ++a) fs.push_back(haar_function(b, n, a));
    // one normalised indicator per root
    for (const Cube& root : b.roots()) {
      MuFunction ind(mu.size(), 0.0);
      for (int i : mu.indices_in(root)) ind[i] = 1.0;
      double m = mu.mass(root);
      for (double& v : ind) v /= std::sqrt(m);
      fs.push_back(ind);
    }
    CHECK(fs.size() == mu.size());
    double worst = 0;
    for (std::size_t i = 0; i < fs.size(); ++i)
      for (std::size_t j = i; j < fs.size(); ++j)
        worst = std::max(worst, std::fabs(inner(mu, fs[i], fs[j]) - (i == j ? 1.0 : 0.0)));
    CHECK(worst < 1e-12);

    MuFunction f = random_function(mu, rng);
    double energy = 0;
    for (const auto& h : fs) energy += inner(mu, f, h) * inner(mu, f, h);
    CHECK(energy == doctest::Approx(inner(mu, f, f)).epsilon(1e-10));

    // telescoping: f = root average + sum of differences on every atom
    MuFunction rebuilt(mu.size(), 0.0);
    for (const Cube& root : b.roots()) {
      double e = avg(mu, f, root);
      for (int i : mu.indices_in(root)) rebuilt[i] = e;
    }
    for (std::size_t n = 0; n < b.nodes().size(); ++n) {
      MuFunction d = delta(b, f, static_cast<int>(n));
      for (std::size_t i = 0; i < mu.size(); ++i) rebuilt[i] += d[i];
      // difference equals child average minus parent average
      const HaarNode& nd = b.nodes()[n];
      for (std::size_t c = 0; c < nd.kids.size(); ++c) {
        double want = avg(mu, f, nd.kids[c]) - avg(mu, f, nd.cube);
        CHECK(std::fabs(d[nd.atoms[c][0]] - want) < 1e-12);
        // each Haar function is bounded on the children
        for (const auto& h : nd.funcs) CHECK(std::fabs(h[c]) <= 1.0 / std::sqrt(nd.kid_mass[c]) * (1 + 1e-12));
      }
    }
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(std::fabs(rebuilt[i] - f[i]) < 1e-12);
  }
}

TEST_CASE("differences do not depend on the choice of node basis") {
  Rng rng(4);
  AtomicMeasure mu = random_measure(40, 2);
  HaarBasis b = build_basis_all(sample_grid(2, 7, 0, 3), mu);
  MuFunction f = random_function(mu, rng);
  for (std::size_t n = 0; n < b.nodes().size(); ++n) {
    const HaarNode& nd = b.nodes()[n];
    std::size_t k = nd.funcs.size();
    if (k < 2) continue;
    // random rotation in the plane of the first two functions
    double th = 2 * M_PI * uniform01(rng);
    std::vector<std::vector<double>> rot = nd.funcs;
    for (std::size_t c = 0; c < nd.kids.size(); ++c) {
      rot[0][c] = std::cos(th) * nd.funcs[0][c] - std::sin(th) * nd.funcs[1][c];
      rot[1][c] = std::sin(th) * nd.funcs[0][c] + std::cos(th) * nd.funcs[1][c];
    }
    MuFunction viaRot(mu.size(), 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      double cf = 0;
      for (std::size_t c = 0; c < nd.kids.size(); ++c)
        for (int i : nd.atoms[c]) cf += f[i] * mu[i].mass * rot[a][c];
      for (std::size_t c = 0; c < nd.kids.size(); ++c)
        for (int i : nd.atoms[c]) viaRot[i] += cf * rot[a][c];
    }
    MuFunction d = delta(b, f, static_cast<int>(n));
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(std::fabs(d[i] - viaRot[i]) < 1e-12);
  }
}

TEST_CASE("coordinate energy equals the Haar energy of the coordinates") {
  for (std::uint64_t seed = 3; seed < 13; ++seed) {
    int dim = 1 + static_cast<int>(seed % 2);
    AtomicMeasure mu = random_measure(seed, dim);
    Grid g = standard_grid(dim, dim == 1 ? 10 : 7, 0);
    Cube root = make_cube(dim, 0, std::vector<Tick>(dim, 0));
    HaarBasis b = build_basis(g, mu, root);
    for (std::size_t n = 0; n < b.nodes().size(); ++n) {
      Cube j = b.nodes()[n].cube;
      double haar = 0;
      for (int k = 0; k < dim; ++k) {
        MuFunction x(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) x[i] = mu.coord(i)[k];
        MuFunction p = project(b, x, j);
        haar += inner(mu, p, p);
      }
      CHECK(haar == doctest::Approx(coordinate_energy(mu, j)).epsilon(1e-10));
    }
  }
}

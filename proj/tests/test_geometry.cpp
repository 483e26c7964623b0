#include <cmath>
#include <set>

#include "doctest.h"
#include "weightlab/geometry.hpp"
#include "weightlab/util.hpp"

using namespace weightlab;

namespace {

Tick t(double v) { return snap(v, kTickBits); }

Cube cube1(double lo, int level) { return make_cube(1, level, {t(lo)}); }
Cube cube2(double a, double b, int level) { return make_cube(2, level, {t(a), t(b)}); }

// Independent distance from cube a to the boundary of cube b in floating point.
double oracle_boundary_distance(const Cube& a, const Cube& b) {
  int n = a.dim;
  bool inside = true, overlap = true;
  for (int k = 0; k < n; ++k) {
    double al = to_double(a.lower[k]), ah = al + a.side_length();
    double bl = to_double(b.lower[k]), bh = bl + b.side_length();
    if (al < bl || ah > bh) inside = false;
    if (!(al < bh && bl < ah)) overlap = false;
  }
  if (inside) {
    double d = 1e300;
    for (int k = 0; k < n; ++k) {
      double al = to_double(a.lower[k]), ah = al + a.side_length();
      double bl = to_double(b.lower[k]), bh = bl + b.side_length();
      d = std::min({d, al - bl, bh - ah});
    }
    return d;
  }
  if (overlap) return 0.0;
  double s = 0;
  for (int k = 0; k < n; ++k) {
    double al = to_double(a.lower[k]), ah = al + a.side_length();
    double bl = to_double(b.lower[k]), bh = bl + b.side_length();
    double g = std::max({0.0, bl - ah, al - bh});
    s += g * g;
  }
  return std::sqrt(s);
}

bool oracle_threshold(double dist, double small, double big, double eps) {
  return dist >= 0.5 * std::pow(small, eps) * std::pow(big, 1 - eps) - 1e-12;
}

Cube random_grid_cube(Rng& rng, const Grid& g, int min_level) {
  int level = min_level + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(g.bottom - min_level + 1)));
  Point p;
  p.dim = g.dim;
  for (int k = 0; k < g.dim; ++k) p.x[k] = static_cast<Tick>(uniform_index(rng, std::uint64_t{1} << 20)) << (kTickBits - 20);
  return g.cube_at(p, level);
}

}  // namespace

TEST_CASE("decimal rendering is exact and round-trips") {
  CHECK(to_decimal(t(0.25)) == "0.25");
  CHECK(to_decimal(t(-0.5)) == "-0.5");
  CHECK(to_decimal(t(3)) == "3");
  CHECK(to_decimal(side_ticks(24)) == "0.000000059604644775390625");
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    Tick v = static_cast<Tick>(uniform_index(rng, std::uint64_t{1} << 40)) - (Tick{1} << 39);
    v = (v >> 6) << 6;  // 24-bit resolution
    CHECK(parse_decimal(to_decimal(v), 24) == v);
  }
  CHECK_THROWS_AS(parse_decimal("abc", 24), ValidationError);
  CHECK(snap(0.3, 2) == t(0.25));
}

TEST_CASE("children and triadic siblings are lexicographic") {
  Cube q = cube2(0, 0, 0);
  auto kids = children(q);
  REQUIRE(kids.size() == 4);
  CHECK(kids[0] == cube2(0, 0, 1));
  CHECK(kids[1] == cube2(0, 0.5, 1));
  CHECK(kids[2] == cube2(0.5, 0, 1));
  CHECK(kids[3] == cube2(0.5, 0.5, 1));
  auto sib = triadic_siblings(cube1(0, 1));
  REQUIRE(sib.size() == 3);
  CHECK(sib[0] == cube1(-0.5, 1));
  CHECK(sib[1] == cube1(0, 1));
  CHECK(sib[2] == cube1(0.5, 1));
  CHECK(triadic_siblings(cube2(0, 0, 2)).size() == 9);
}

TEST_CASE("grid by scales matches grid by translation") {
  Grid g = grid_from_bits(1, 1, 0, {{0, 1}});
  CHECK(g.offset[0] == t(0.5));
  Point p{1, {t(1.0)}};
  CHECK(g.cube_at(p, 0) == cube1(0.5, 0));

  for (int dim = 1; dim <= 2; ++dim) {
    int max_span = dim == 1 ? 10 : 4;
    for (int span = 0; span <= max_span; ++span) {
      int top = -1, bottom = top + span;
      std::set<std::vector<Tick>> from_bits, from_offsets;
      int nbits = dim * (span + 1);
      for (std::uint64_t code = 0; code < (std::uint64_t{1} << nbits); ++code) {
        std::vector<std::vector<int>> bits(dim, std::vector<int>(span + 1));
        for (int k = 0; k < dim; ++k)
          for (int i = 0; i <= span; ++i) bits[k][i] = (code >> (k * (span + 1) + i)) & 1;
        Grid gb = grid_from_bits(dim, bottom, top, bits);
        from_bits.insert({gb.offset.begin(), gb.offset.begin() + dim});
      }
      for (const Grid& gt : enumerate_grids(dim, bottom, top, 1u << 20)) {
        from_offsets.insert({gt.offset.begin(), gt.offset.begin() + dim});
        CHECK(grid_index(gt) == grid_index(grid_from_index(dim, bottom, top, grid_index(gt))));
      }
      CHECK(from_bits == from_offsets);
      CHECK(from_offsets.size() == grid_count(dim, bottom, top));
    }
  }
  CHECK_THROWS_AS(enumerate_grids(2, 10, 0, 1000), ValidationError);
  CHECK(sample_grid(2, 8, 0, 99) == sample_grid(2, 8, 0, 99));
}

TEST_CASE("grid cubes nest across levels") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Grid g = sample_grid(2, 8, -1, trial);
    Cube c = random_grid_cube(rng, g, g.top + 1);
    CHECK(g.has(c));
    Cube p = g.parent(c);
    CHECK(g.has(p));
    CHECK(p.contains(c));
    bool found = false;
    for (const Cube& k : children(p)) found = found || k == c;
    CHECK(found);
  }
}

TEST_CASE("deep embedding and goodness examples") {
  GoodnessParams p = GoodnessParams::with_r(3, 0.5);
  CHECK(is_deeply_embedded(make_cube(1, 4, {t(0.25)}), cube1(0, 0), p));
  CHECK_FALSE(is_deeply_embedded(make_cube(1, 4, {t(0.0)}), cube1(0, 0), p));
  CHECK_FALSE(is_deeply_embedded(make_cube(1, 2, {t(0.25)}), cube1(0, 0), p));
  Grid g = standard_grid(1, 10, 0);
  CHECK_FALSE(is_good_cube(cube1(0, 5), g, p));
  CHECK(is_good_cube(make_cube(1, 5, {t(11.0 / 32)}), g, p));
}

TEST_CASE("goodness agrees with brute force over ancestors") {
  Rng rng(11);
  for (int trial = 0; trial < 400; ++trial) {
    int dim = 1 + trial % 2;
    GoodnessParams p = GoodnessParams::with_r(2 + trial % 4, 0.3 + 0.1 * (trial % 2));
    Grid g = sample_grid(dim, 9, 0, trial + 1);
    Cube i = random_grid_cube(rng, g, 0);
    bool expect = true;
    for (int lev = 0; lev <= i.level - p.r; ++lev) {
      // scan grid cubes at this level around i for the one containing it
      Tick s = side_ticks(lev);
      for (int shift = -1; shift <= 1; ++shift) {
        Cube k = g.ancestor(i, lev);
        k.lower[0] += shift * s;
        if (!k.contains(i)) continue;
        if (!oracle_threshold(oracle_boundary_distance(i, k), i.side_length(), k.side_length(), p.eps)) expect = false;
      }
    }
    CHECK(is_good_cube(i, g, p) == expect);
  }
}

TEST_CASE("Q-good grid agrees with brute force over grid cubes") {
  Rng rng(5);
  int checked_bad = 0, checked_good = 0;
  for (int trial = 0; trial < 300; ++trial) {
    int dim = 1 + trial % 2;
    GoodnessParams p = GoodnessParams::with_r(2 + trial % 5, 0.45);
    Grid g = sample_grid(dim, 8, 0, 1000 + trial);
    Cube q = random_grid_cube(rng, g, 5);
    bool vacuous = false;
    bool fast = is_q_good_grid(q, g, p, &vacuous);
    bool expect = true;
    for (int lev = g.top; lev <= q.level - p.r; ++lev) {
      Tick s = side_ticks(lev);
      Cube centre = g.ancestor(q, lev);
      int total = 1;
      for (int k = 0; k < dim; ++k) total *= 5;
      for (int idx = 0; idx < total; ++idx) {
        Cube ic = centre;
        int rest = idx;
        for (int k = 0; k < dim; ++k) {
          ic.lower[k] += (rest % 5 - 2) * s;
          rest /= 5;
        }
        for (const Cube& sib : triadic_siblings(q)) {
          if (!oracle_threshold(oracle_boundary_distance(sib, ic), q.side_length(), ic.side_length(), p.eps)) {
            expect = false;
          }
        }
      }
    }
    CHECK(fast == expect);
    CHECK(vacuous == (q.level - p.r < g.top));
    (expect ? checked_good : checked_bad)++;
  }
  CHECK(checked_bad > 10);
  CHECK(checked_good > 10);
}

TEST_CASE("Q-good cube uses the triadic siblings") {
  GoodnessParams p = GoodnessParams::with_r(2, 0.45);
  Cube q = cube1(0, 0);
  CHECK(is_q_good_cube(cube1(0, 1), q, p));  // too large to be tested
  CHECK_FALSE(is_q_good_cube(make_cube(1, 12, {0}), q, p));
  CHECK(is_q_good_cube(make_cube(1, 12, {t(0.5)}), q, p));
}

TEST_CASE("maximal deep subcubes agree with brute force") {
  for (int dim = 1; dim <= 2; ++dim) {
    GoodnessParams p = GoodnessParams::with_r(2, 0.4);
    Cube k = dim == 1 ? cube1(0, 0) : cube2(0, 0, 0);
    int finest = dim == 1 ? 8 : 6;
    auto fast = maximal_deep_subcubes(k, finest, p);
    std::vector<Cube> all{k};
    std::vector<Cube> deep;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].level < finest) {
        for (const Cube& c : children(all[i])) all.push_back(c);
      }
    }
    std::set<Cube> deep_set;
    for (const Cube& j : all) {
      if (j.level > 0 && is_deeply_embedded(j, k, p)) deep_set.insert(j);
    }
    std::set<Cube> maximal;
    for (const Cube& j : deep_set) {
      bool has_deep_ancestor = false;
      for (const Cube& a : deep_set) has_deep_ancestor = has_deep_ancestor || (a.level < j.level && a.contains(j));
      if (!has_deep_ancestor) maximal.insert(j);
    }
    CHECK(std::set<Cube>(fast.begin(), fast.end()) == maximal);
    for (std::size_t i = 0; i < fast.size(); ++i)
      for (std::size_t j = i + 1; j < fast.size(); ++j) CHECK_FALSE(interiors_intersect(fast[i], fast[j]));
  }
}

TEST_CASE("alternate cubes and refinements") {
  Grid g = standard_grid(1, 10, 0);
  auto alt = alternate_cubes(cube1(0.25, 2), g);
  REQUIRE(alt.size() == 2);
  CHECK(alt[0] == cube1(0, 1));
  CHECK(alt[1] == cube1(0.25, 1));
  GoodnessParams p = GoodnessParams::with_r(2, 0.45);
  Cube i = cube1(0.25, 1);
  for (int ell = 0; ell <= 2; ++ell) {
    auto ref = refined_deep_subcubes(i, ell, g, p);
    for (std::size_t a = 0; a < ref.size(); ++a) {
      CHECK(i.contains(ref[a]));
      for (std::size_t b = a + 1; b < ref.size(); ++b) CHECK_FALSE(interiors_intersect(ref[a], ref[b]));
    }
  }
  CHECK_THROWS_AS(refined_deep_subcubes(cube1(0, 0), 2, g, p), ValidationError);
}

TEST_CASE("pair relations") {
  Grid g = standard_grid(1, 10, 0);
  CHECK(touching(cube1(0, 1), cube1(0.5, 1)));
  CHECK(touching(cube1(0, 1), cube1(0.5, 3)));
  CHECK_FALSE(touching(cube1(0, 1), cube1(0, 2)));
  CHECK_FALSE(touching(cube1(0, 2), cube1(0.5, 2)));
  CHECK(are_neighbours(cube1(0, 1), cube1(0.5, 1), g));
  CHECK_FALSE(are_neighbours(cube1(0, 2), cube1(0.5, 2), g));
  CHECK_FALSE(are_neighbours(cube1(0, 1), cube1(0.5, 2), g));
  CHECK(eta_close(cube1(0, 1), cube1(0.5, 3), 2, g));
  CHECK_FALSE(eta_close(cube1(0, 1), cube1(0.5, 4), 2, g));
  Grid g2 = standard_grid(2, 8, 0);
  CHECK(are_neighbours(cube2(0, 0, 1), cube2(0.5, 0.5, 1), g2));
  CHECK(touching(cube2(0, 0, 1), cube2(0.5, 0.5, 1)));
}

TEST_CASE("shaving regions") {
  Cube j = cube1(0, 0);
  Cube child = cube1(0, 1);
  auto faces = corner_faces(child, j, 0.25);
  REQUIRE(faces.size() == 1);
  CHECK(faces[0].lo[0] == 0.0);
  CHECK(faces[0].hi[0] == 0.25);
  CHECK(faces[0].hi_closed[0]);
  CHECK(in_corner_region(Point{1, {t(0.25)}}, child, j, 0.25));
  CHECK_FALSE(in_corner_region(Point{1, {t(0.3)}}, child, j, 0.25));

  Cube j2 = cube2(0, 0, 0);
  double area = 0;
  for (const Box& b : corner_faces(cube2(0, 0, 1), j2, 0.25)) area += b.volume();
  CHECK(area == doctest::Approx(0.1875).epsilon(1e-15));

  Rng rng(17);
  for (int idx = 0; idx < 4; ++idx) {
    Cube c = children(j2)[idx];
    auto fs = corner_faces(c, j2, 0.125);
    for (int s = 0; s < 4000; ++s) {
      Point x{2, {static_cast<Tick>(uniform_index(rng, 1u << 8)) << (kTickBits - 8),
                  static_cast<Tick>(uniform_index(rng, 1u << 8)) << (kTickBits - 8)}};
      int hits = 0;
      for (const Box& b : fs) hits += b.contains(x);
      CHECK(hits <= 1);
      CHECK((hits == 1) == in_corner_region(x, c, j2, 0.125));
    }
  }
}

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "weightlab/dyadic.hpp"

namespace weightlab {

// Half-open cube prod [lower_k, lower_k + 2^-level).
struct Cube {
  int dim = 1;
  int level = 0;
  std::array<Tick, kMaxDim> lower{};

  Tick side() const { return side_ticks(level); }
  Tick upper(int k) const { return lower[k] + side(); }
  double side_length() const;
  // Lebesgue measure |Q| = side^dim.
  double volume() const;
  void center(double* out) const;

  bool contains(const Point& p) const;
  bool contains(const Cube& c) const;

  auto operator<=>(const Cube&) const = default;
  bool operator==(const Cube&) const = default;
};

Cube make_cube(int dim, int level, const std::vector<Tick>& lower);
Cube make_cube_d(const std::vector<double>& lower, int level, int resolution_bits = kTickBits);

std::string describe(const Cube& q);

// Children in lexicographic order of their lower corners.
std::vector<Cube> children(const Cube& q);
// The 3^dim same-size cubes around q (q included), lexicographic order.
std::vector<Cube> triadic_siblings(const Cube& q);

bool interiors_intersect(const Cube& a, const Cube& b);
bool closures_intersect(const Cube& a, const Cube& b);
// a lies inside the concentric cube of three times the side of b.
bool inside_triple(const Cube& a, const Cube& b);

// dist(a, boundary of b), exact up to the final conversion to double.
double boundary_distance(const Cube& a, const Cube& b);

// Translated dyadic grid D + offset restricted to levels top..bottom.
struct Grid {
  int dim = 1;
  int top = 0;     // coarsest level N, side 2^-N
  int bottom = 10; // finest level M
  std::array<Tick, kMaxDim> offset{};

  bool has(const Cube& q) const;
  Cube cube_at(const Point& p, int level) const;
  Cube ancestor(const Cube& q, int level) const;
  Cube parent(const Cube& q) const { return ancestor(q, q.level - 1); }

  bool operator==(const Grid&) const = default;
};

void validate_grid_levels(int dim, int bottom, int top);

Grid standard_grid(int dim, int bottom, int top);
// Number of translation grids 2^{dim (M - N)}.
std::uint64_t grid_count(int dim, int bottom, int top);
Grid grid_from_index(int dim, int bottom, int top, std::uint64_t index);
std::uint64_t grid_index(const Grid& g);
// Construction by scales: bits[k][i - top] for levels i = top..bottom on axis k.
Grid grid_from_bits(int dim, int bottom, int top, const std::vector<std::vector<int>>& bits);
// Construction by translation: offsets must be multiples of 2^-bottom in [0, 2^-top).
Grid grid_from_offset(int dim, int bottom, int top, const std::vector<Tick>& offset);
std::vector<Grid> enumerate_grids(int dim, int bottom, int top, std::uint64_t cap);
Grid sample_grid(int dim, int bottom, int top, std::uint64_t seed);

struct GoodnessParams {
  double eps = 0.45;
  int r = 6;
  int rho = 9;
  int tau = 7;
  bool strict_tau = false;

  static GoodnessParams with_r(int r, double eps = 0.45);
  void validate() const;
};

inline constexpr double kThresholdMargin = 0x1.0p-40;

// dist >= 1/2 small^eps big^(1-eps), ties resolved as satisfied.
bool meets_threshold(double dist, double small_side, double big_side, double eps);

bool is_deeply_embedded(const Cube& j, const Cube& k, const GoodnessParams& p);
bool is_good_cube(const Cube& i, const Grid& g, const GoodnessParams& p);
bool is_q_good_cube(const Cube& i, const Cube& q, const GoodnessParams& p);
// vacuous is set when no grid level is large enough to be tested.
bool is_q_good_grid(const Cube& q, const Grid& g, const GoodnessParams& p, bool* vacuous = nullptr);

// Maximal dyadic subcubes J of k down to finest_level with J deeply embedded in k.
// keep(J) == false prunes J and everything below it.
std::vector<Cube> maximal_deep_subcubes(const Cube& k, int finest_level, const GoodnessParams& p,
                                        const std::function<bool(const Cube&)>& keep = {});

// The 2^dim cubes of side 2 l(L) that contain L and are unions of grid cubes.
std::vector<Cube> alternate_cubes(const Cube& l, const Grid& g);

// Deep subcubes of the ell-fold grid parents of the children of i that sit
// inside some maximal deep subcube of i.
std::vector<Cube> refined_deep_subcubes(const Cube& i, int ell, const Grid& g, const GoodnessParams& p,
                                        const std::function<bool(const Cube&)>& keep = {});

bool touching(const Cube& a, const Cube& b);
bool are_neighbours(const Cube& a, const Cube& b, const Grid& g);
bool eta_close(const Cube& a, const Cube& b, int eta, const Grid& g);

// Axis-parallel box with per-side open/closed flags, used for shaved regions.
struct Box {
  int dim = 1;
  std::array<double, kMaxDim> lo{}, hi{};
  std::array<bool, kMaxDim> lo_closed{}, hi_closed{};

  bool contains(const double* x) const;
  bool contains(const Point& p) const;
  double volume() const;
};

// {x : dist(x, boundary of j) > lambda l(j)} as an open box.
Box shaved_interior(const Cube& j, double lambda);
// child minus the shaved interior of its parent, split into dim disjoint
// slabs; overlaps go to the lowest axis.
std::vector<Box> corner_faces(const Cube& child, const Cube& parent, double lambda);
bool in_corner_region(const Point& x, const Cube& child, const Cube& parent, double lambda);

}  // namespace weightlab

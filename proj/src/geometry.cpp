#include "weightlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "weightlab/util.hpp"

namespace weightlab {

double Cube::side_length() const { return std::ldexp(1.0, -level); }

double Cube::volume() const { return std::ldexp(1.0, -level * dim); }

void Cube::center(double* out) const {
  double half = 0.5 * side_length();
  for (int k = 0; k < dim; ++k) out[k] = to_double(lower[k]) + half;
}

bool Cube::contains(const Point& p) const {
  Tick s = side();
  for (int k = 0; k < dim; ++k) {
    if (p.x[k] < lower[k] || p.x[k] >= lower[k] + s) return false;
  }
  return true;
}

bool Cube::contains(const Cube& c) const {
  if (c.level < level) return false;
  Tick s = side(), cs = c.side();
  for (int k = 0; k < dim; ++k) {
    if (c.lower[k] < lower[k] || c.lower[k] + cs > lower[k] + s) return false;
  }
  return true;
}

Cube make_cube(int dim, int level, const std::vector<Tick>& lower) {
  check_dim(dim);
  if (static_cast<int>(lower.size()) != dim) throw ValidationError("cube corner has wrong dimension");
  side_ticks(level);
  Cube q;
  q.dim = dim;
  q.level = level;
  for (int k = 0; k < dim; ++k) q.lower[k] = lower[k];
  return q;
}

Cube make_cube_d(const std::vector<double>& lower, int level, int resolution_bits) {
  std::vector<Tick> t;
  for (double v : lower) t.push_back(snap(v, resolution_bits));
  return make_cube(static_cast<int>(lower.size()), level, t);
}

std::string describe(const Cube& q) {
  std::string s = "[";
  for (int k = 0; k < q.dim; ++k) {
    if (k) s += " x ";
    s += to_decimal(q.lower[k]) + "," + to_decimal(q.upper(k)) + ")";
  }
  return s + "]";
}

std::vector<Cube> children(const Cube& q) {
  std::vector<Cube> out;
  int n = q.dim;
  Tick half = side_ticks(q.level + 1);
  for (int idx = 0; idx < (1 << n); ++idx) {
    Cube c = q;
    c.level = q.level + 1;
    for (int k = 0; k < n; ++k) {
      if ((idx >> (n - 1 - k)) & 1) c.lower[k] += half;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<Cube> triadic_siblings(const Cube& q) {
  std::vector<Cube> out;
  int n = q.dim;
  int total = 1;
  for (int k = 0; k < n; ++k) total *= 3;
  Tick s = q.side();
  for (int idx = 0; idx < total; ++idx) {
    Cube c = q;
    int rest = idx;
    for (int k = n - 1; k >= 0; --k) {
      c.lower[k] += static_cast<Tick>(rest % 3 - 1) * s;
      rest /= 3;
    }
    out.push_back(c);
  }
  return out;
}

bool interiors_intersect(const Cube& a, const Cube& b) {
  for (int k = 0; k < a.dim; ++k) {
    if (a.upper(k) <= b.lower[k] || b.upper(k) <= a.lower[k]) return false;
  }
  return true;
}

bool closures_intersect(const Cube& a, const Cube& b) {
  for (int k = 0; k < a.dim; ++k) {
    if (a.upper(k) < b.lower[k] || b.upper(k) < a.lower[k]) return false;
  }
  return true;
}

bool inside_triple(const Cube& a, const Cube& b) {
  Tick s = b.side();
  for (int k = 0; k < a.dim; ++k) {
    if (a.lower[k] < b.lower[k] - s || a.upper(k) > b.upper(k) + s) return false;
  }
  return true;
}

double boundary_distance(const Cube& a, const Cube& b) {
  if (b.contains(a)) {
    Tick gap = b.side();
    for (int k = 0; k < a.dim; ++k) {
      gap = std::min(gap, a.lower[k] - b.lower[k]);
      gap = std::min(gap, b.upper(k) - a.upper(k));
    }
    return to_double(gap);
  }
  if (interiors_intersect(a, b)) return 0.0;
  double sum = 0.0;
  for (int k = 0; k < a.dim; ++k) {
    Tick gap = std::max<Tick>({0, b.lower[k] - a.upper(k), a.lower[k] - b.upper(k)});
    double g = to_double(gap);
    sum += g * g;
  }
  return std::sqrt(sum);
}

void validate_grid_levels(int dim, int bottom, int top) {
  check_dim(dim);
  if (top > bottom) throw ValidationError("grid top level N must not exceed bottom level M");
  if (bottom > kTickBits) throw ValidationError("grid bottom level exceeds tick resolution");
  if (top < kCoarsestLevel) throw ValidationError("grid top level too coarse");
  if (dim * (bottom - top) > 62) throw ValidationError("grid family too large to index");
}

bool Grid::has(const Cube& q) const {
  if (q.dim != dim || q.level < top || q.level > bottom) return false;
  Tick s = q.side();
  for (int k = 0; k < dim; ++k) {
    Tick d = q.lower[k] - offset[k];
    if (d % s != 0) return false;
  }
  return true;
}

Cube Grid::cube_at(const Point& p, int level) const {
  Cube q;
  q.dim = dim;
  q.level = level;
  Tick s = side_ticks(level);
  for (int k = 0; k < dim; ++k) q.lower[k] = offset[k] + floor_div(p.x[k] - offset[k], s) * s;
  return q;
}

Cube Grid::ancestor(const Cube& q, int level) const {
  Point p;
  p.dim = dim;
  p.x = q.lower;
  return cube_at(p, level);
}

Grid standard_grid(int dim, int bottom, int top) {
  validate_grid_levels(dim, bottom, top);
  Grid g;
  g.dim = dim;
  g.top = top;
  g.bottom = bottom;
  return g;
}

std::uint64_t grid_count(int dim, int bottom, int top) {
  validate_grid_levels(dim, bottom, top);
  return std::uint64_t{1} << (dim * (bottom - top));
}

Grid grid_from_index(int dim, int bottom, int top, std::uint64_t index) {
  Grid g = standard_grid(dim, bottom, top);
  if (index >= grid_count(dim, bottom, top)) throw ValidationError("grid index out of range");
  int bits = bottom - top;
  std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  for (int k = dim - 1; k >= 0; --k) {
    g.offset[k] = static_cast<Tick>(index & mask) << (kTickBits - bottom);
    index >>= bits;
  }
  return g;
}

std::uint64_t grid_index(const Grid& g) {
  std::uint64_t index = 0;
  int bits = g.bottom - g.top;
  for (int k = 0; k < g.dim; ++k) {
    index = (index << bits) | static_cast<std::uint64_t>(g.offset[k] >> (kTickBits - g.bottom));
  }
  return index;
}

Grid grid_from_bits(int dim, int bottom, int top, const std::vector<std::vector<int>>& bits) {
  Grid g = standard_grid(dim, bottom, top);
  if (static_cast<int>(bits.size()) != dim) throw ValidationError("bit vector has wrong dimension");
  for (int k = 0; k < dim; ++k) {
    if (static_cast<int>(bits[k].size()) != bottom - top + 1) {
      throw ValidationError("bit vector must have one entry per level N..M");
    }
    Tick off = 0;
    for (int i = top; i <= bottom; ++i) {
      int b = bits[k][i - top];
      if (b != 0 && b != 1) throw ValidationError("grid bits must be 0 or 1");
      // The top-level bit never shifts any level in N..M.
      if (i > top && b) off += side_ticks(i);
    }
    g.offset[k] = off;
  }
  return g;
}

Grid grid_from_offset(int dim, int bottom, int top, const std::vector<Tick>& offset) {
  Grid g = standard_grid(dim, bottom, top);
  if (static_cast<int>(offset.size()) != dim) throw ValidationError("offset has wrong dimension");
  Tick step = side_ticks(bottom), span = side_ticks(top);
  for (int k = 0; k < dim; ++k) {
    if (offset[k] < 0 || offset[k] >= span || offset[k] % step != 0) {
      throw ValidationError("grid offset must be a multiple of 2^-M in [0, 2^-N)");
    }
    g.offset[k] = offset[k];
  }
  return g;
}

std::vector<Grid> enumerate_grids(int dim, int bottom, int top, std::uint64_t cap) {
  std::uint64_t count = grid_count(dim, bottom, top);
  if (count > cap) throw ValidationError("grid enumeration exceeds cap " + std::to_string(cap));
  std::vector<Grid> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(grid_from_index(dim, bottom, top, i));
  return out;
}

Grid sample_grid(int dim, int bottom, int top, std::uint64_t seed) {
  Rng rng(seed);
  return grid_from_index(dim, bottom, top, uniform_index(rng, grid_count(dim, bottom, top)));
}

GoodnessParams GoodnessParams::with_r(int r, double eps) {
  GoodnessParams p;
  p.eps = eps;
  p.r = r;
  p.rho = r + 3;
  p.tau = r + 1;
  return p;
}

void GoodnessParams::validate() const {
  if (!(eps > 0.0 && eps < 0.5)) throw ValidationError("eps must lie in (0, 1/2)");
  if (r < 1) throw ValidationError("goodness depth r must be positive");
  if (rho < r) throw ValidationError("rho must be at least r");
  if (tau < 0) throw ValidationError("tau must be non-negative");
}

bool meets_threshold(double dist, double small_side, double big_side, double eps) {
  double thr = 0.5 * std::pow(small_side, eps) * std::pow(big_side, 1.0 - eps);
  return dist + kThresholdMargin >= thr;
}

bool is_deeply_embedded(const Cube& j, const Cube& k, const GoodnessParams& p) {
  if (!k.contains(j)) return false;
  if (j.level - k.level < p.r) return false;
  return meets_threshold(boundary_distance(j, k), j.side_length(), k.side_length(), p.eps);
}

namespace {

bool good_against_ancestors(const Cube& i, const Grid& g, const GoodnessParams& p) {
  for (int lev = i.level - p.r; lev >= g.top; --lev) {
    Cube k = g.ancestor(i, lev);
    if (!meets_threshold(boundary_distance(i, k), i.side_length(), k.side_length(), p.eps)) return false;
  }
  return true;
}

// Distance from the closed interval [a, b] to the lattice origin + spacing Z.
Tick lattice_gap(Tick a, Tick b, Tick origin, Tick spacing) {
  Tick first = origin + (floor_div(a - origin - 1, spacing) + 1) * spacing;  // smallest point >= a
  if (first <= b) return 0;
  return std::min(first - b, a - (first - spacing));
}

}  // namespace

bool is_good_cube(const Cube& i, const Grid& g, const GoodnessParams& p) {
  if (!p.strict_tau) return good_against_ancestors(i, g, p);
  if (!good_against_ancestors(i, g, p)) return false;
  if (i.level < g.bottom) {
    for (const Cube& c : children(i)) {
      if (!good_against_ancestors(c, g, p)) return false;
    }
  }
  for (int lev = i.level - 1; lev >= std::max(g.top, i.level - p.tau); --lev) {
    if (!good_against_ancestors(g.ancestor(i, lev), g, p)) return false;
  }
  return true;
}

bool is_q_good_cube(const Cube& i, const Cube& q, const GoodnessParams& p) {
  if (i.side_length() > std::ldexp(q.side_length(), -p.rho)) return true;
  for (const Cube& s : triadic_siblings(q)) {
    if (!meets_threshold(boundary_distance(i, s), i.side_length(), s.side_length(), p.eps)) return false;
  }
  return true;
}

bool is_q_good_grid(const Cube& q, const Grid& g, const GoodnessParams& p, bool* vacuous) {
  // All cube boundaries of one grid level form a lattice of hyperplanes, so the
  // minimum over cubes of dist(Q', boundary of I) is the distance to that lattice.
  int lowest = q.level - p.r;
  if (vacuous) *vacuous = lowest < g.top;
  Tick qs = q.side();
  for (int lev = g.top; lev <= lowest; ++lev) {
    Tick spacing = side_ticks(lev);
    double big = std::ldexp(1.0, -lev);
    for (const Cube& s : triadic_siblings(q)) {
      Tick gap = spacing;
      for (int k = 0; k < q.dim; ++k) {
        gap = std::min(gap, lattice_gap(s.lower[k], s.lower[k] + qs, g.offset[k], spacing));
      }
      if (!meets_threshold(to_double(gap), q.side_length(), big, p.eps)) return false;
    }
  }
  return true;
}

std::vector<Cube> maximal_deep_subcubes(const Cube& k, int finest_level, const GoodnessParams& p,
                                        const std::function<bool(const Cube&)>& keep) {
  std::vector<Cube> out;
  if (k.level >= finest_level) return out;
  std::vector<Cube> stack = children(k);
  std::reverse(stack.begin(), stack.end());
  while (!stack.empty()) {
    Cube j = stack.back();
    stack.pop_back();
    if (keep && !keep(j)) continue;
    if (is_deeply_embedded(j, k, p)) {
      out.push_back(j);
      continue;
    }
    if (j.level < finest_level) {
      auto kids = children(j);
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Cube> alternate_cubes(const Cube& l, const Grid& g) {
  if (!g.has(l)) throw ValidationError("alternate cubes need a grid cube");
  if (l.level - 1 < kCoarsestLevel) throw ValidationError("cube too large for alternates");
  std::vector<Cube> out;
  int n = l.dim;
  Tick s = l.side();
  for (int idx = 0; idx < (1 << n); ++idx) {
    Cube c = l;
    c.level = l.level - 1;
    for (int k = 0; k < n; ++k) {
      if (((idx >> (n - 1 - k)) & 1) == 0) c.lower[k] -= s;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<Cube> refined_deep_subcubes(const Cube& i, int ell, const Grid& g, const GoodnessParams& p,
                                        const std::function<bool(const Cube&)>& keep) {
  if (ell < 0) throw ValidationError("refinement order must be non-negative");
  std::vector<Cube> base = maximal_deep_subcubes(i, g.bottom, p, keep);
  if (ell == 0) return base;
  std::set<Cube> out;
  for (const Cube& kid : children(i)) {
    int lev = kid.level - ell;
    if (lev < g.top) throw ValidationError("refinement reaches above the top grid level");
    Cube a = g.ancestor(kid, lev);
    auto within = [&](const Cube& j) {
      if (!interiors_intersect(j, i)) return false;
      return !keep || keep(j);
    };
    for (const Cube& j : maximal_deep_subcubes(a, g.bottom, p, within)) {
      for (const Cube& b : base) {
        if (b.contains(j)) {
          out.insert(j);
          break;
        }
      }
    }
  }
  return {out.begin(), out.end()};
}

bool touching(const Cube& a, const Cube& b) {
  return closures_intersect(a, b) && !interiors_intersect(a, b);
}

bool are_neighbours(const Cube& a, const Cube& b, const Grid& g) {
  if (!g.has(a) || !g.has(b)) return false;
  if (interiors_intersect(a, b)) return false;
  return inside_triple(a, b) && inside_triple(b, a);
}

bool eta_close(const Cube& a, const Cube& b, int eta, const Grid& g) {
  if (std::abs(a.level - b.level) > eta) return false;
  if (!g.has(a) || !g.has(b)) return false;
  if (!touching(a, b)) return false;
  return inside_triple(a, b) || inside_triple(b, a);
}

bool Box::contains(const double* x) const {
  for (int k = 0; k < dim; ++k) {
    if (lo_closed[k] ? x[k] < lo[k] : x[k] <= lo[k]) return false;
    if (hi_closed[k] ? x[k] > hi[k] : x[k] >= hi[k]) return false;
  }
  return true;
}

bool Box::contains(const Point& p) const {
  double x[kMaxDim];
  point_to_doubles(p, x);
  return contains(x);
}

double Box::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= std::max(0.0, hi[k] - lo[k]);
  return v;
}

Box shaved_interior(const Cube& j, double lambda) {
  if (!(lambda > 0.0 && lambda < 0.5)) throw ValidationError("lambda must lie in (0, 1/2)");
  Box b;
  b.dim = j.dim;
  double w = lambda * j.side_length();
  for (int k = 0; k < j.dim; ++k) {
    b.lo[k] = to_double(j.lower[k]) + w;
    b.hi[k] = to_double(j.upper(k)) - w;
    b.lo_closed[k] = false;
    b.hi_closed[k] = false;
  }
  return b;
}

std::vector<Box> corner_faces(const Cube& child, const Cube& parent, double lambda) {
  if (!(lambda > 0.0 && lambda < 0.5)) throw ValidationError("lambda must lie in (0, 1/2)");
  if (child.level != parent.level + 1 || !parent.contains(child)) {
    throw ValidationError("corner faces need a child of the parent cube");
  }
  int n = child.dim;
  double w = lambda * parent.side_length();
  std::vector<Box> faces;
  for (int k = 0; k < n; ++k) {
    Box b;
    b.dim = n;
    for (int j = 0; j < n; ++j) {
      double lo = to_double(child.lower[j]);
      double hi = to_double(child.upper(j));
      bool low_side = child.lower[j] == parent.lower[j];
      if (j == k) {
        // the slab along the outer face
        if (low_side) {
          b.lo[j] = lo, b.hi[j] = lo + w, b.lo_closed[j] = true, b.hi_closed[j] = true;
        } else {
          b.lo[j] = hi - w, b.hi[j] = hi, b.lo_closed[j] = true, b.hi_closed[j] = false;
        }
      } else if (j < k) {
        // outside the earlier slabs
        if (low_side) {
          b.lo[j] = lo + w, b.hi[j] = hi, b.lo_closed[j] = false, b.hi_closed[j] = false;
        } else {
          b.lo[j] = lo, b.hi[j] = hi - w, b.lo_closed[j] = true, b.hi_closed[j] = false;
        }
      } else {
        b.lo[j] = lo, b.hi[j] = hi, b.lo_closed[j] = true, b.hi_closed[j] = false;
      }
    }
    faces.push_back(b);
  }
  return faces;
}

bool in_corner_region(const Point& x, const Cube& child, const Cube& parent, double lambda) {
  return child.contains(x) && !shaved_interior(parent, lambda).contains(x);
}

}  // namespace weightlab

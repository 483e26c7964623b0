#include "weightlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "weightlab/util.hpp"

namespace weightlab {

AtomicMeasure::AtomicMeasure(int dim, std::vector<Atom> atoms) : dim_(dim) {
  check_dim(dim);
  for (const Atom& a : atoms) {
    if (a.point.dim != dim) throw ValidationError("atom dimension does not match measure dimension");
    if (!std::isfinite(a.mass) || a.mass < 0.0) throw ValidationError("atom masses must be finite and non-negative");
  }
  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.point < b.point; });
  for (const Atom& a : atoms) {
    if (a.mass == 0.0) continue;
    if (!atoms_.empty() && atoms_.back().point == a.point) {
      atoms_.back().mass += a.mass;
    } else {
      atoms_.push_back(a);
    }
  }
  coords_.resize(atoms_.size() * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < atoms_.size(); ++i) point_to_doubles(atoms_[i].point, coords_.data() + i * dim);
}

double AtomicMeasure::total_mass() const {
  Accumulator acc;
  for (const Atom& a : atoms_) acc += a.mass;
  return acc.value();
}

double AtomicMeasure::mass(const Cube& q) const {
  Accumulator acc;
  for (const Atom& a : atoms_) {
    if (q.contains(a.point)) acc += a.mass;
  }
  return acc.value();
}

std::vector<int> AtomicMeasure::indices_in(const Cube& q) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (q.contains(atoms_[i].point)) out.push_back(static_cast<int>(i));
  }
  return out;
}

int AtomicMeasure::index_of(const Point& p) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), p, [](const Atom& a, const Point& x) { return a.point < x; });
  if (it != atoms_.end() && it->point == p) return static_cast<int>(it - atoms_.begin());
  return -1;
}

double AtomicMeasure::mass_at(const Point& p) const {
  int i = index_of(p);
  return i < 0 ? 0.0 : atoms_[i].mass;
}

void AtomicMeasure::hull(std::vector<double>& lo, std::vector<double>& hi) const {
  lo.assign(dim_, 0.0);
  hi.assign(dim_, 0.0);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    for (int k = 0; k < dim_; ++k) {
      double v = coord(i)[k];
      if (i == 0 || v < lo[k]) lo[k] = v;
      if (i == 0 || v > hi[k]) hi[k] = v;
    }
  }
}

AtomicMeasure AtomicMeasure::scaled(double factor) const {
  std::vector<Atom> a = atoms_;
  for (Atom& x : a) x.mass *= factor;
  return AtomicMeasure(dim_, std::move(a));
}

std::vector<Point> common_points(const AtomicMeasure& a, const AtomicMeasure& b) {
  std::vector<Point> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].point < b[j].point) {
      ++i;
    } else if (b[j].point < a[i].point) {
      ++j;
    } else {
      out.push_back(a[i].point);
      ++i, ++j;
    }
  }
  return out;
}

double punctured_mass(const AtomicMeasure& mu, const AtomicMeasure& other, const Cube& q) {
  double total = mu.mass(q);
  double largest = 0.0;
  for (const Point& p : common_points(mu, other)) {
    if (q.contains(p)) largest = std::max(largest, mu.mass_at(p));
  }
  return total - largest;
}

namespace {

void check_level_for_centers(int level, int resolution) {
  if (level < 0 || level + 1 > resolution) {
    throw ValidationError("tile level must satisfy 0 <= level < resolution");
  }
}

AtomicMeasure make_lattice(const GeneratorParams& p) {
  check_level_for_centers(p.level, p.resolution);
  int n = p.dim;
  std::uint64_t per = std::uint64_t{1} << p.level;
  std::uint64_t total = 1;
  for (int k = 0; k < n; ++k) {
    total *= per;
    if (total > (std::uint64_t{1} << 24)) throw ValidationError("lattice too large");
  }
  double mass = std::ldexp(1.0, -n * p.level);
  Tick side = side_ticks(p.level);
  std::vector<Atom> atoms;
  atoms.reserve(total);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    Atom a;
    a.point.dim = n;
    std::uint64_t rest = idx;
    for (int k = n - 1; k >= 0; --k) {
      a.point.x[k] = static_cast<Tick>(rest % per) * side + side / 2;
      rest /= per;
    }
    a.mass = mass;
    atoms.push_back(a);
  }
  return AtomicMeasure(n, std::move(atoms));
}

AtomicMeasure make_random(const GeneratorParams& p) {
  check_level_for_centers(p.level, p.resolution);
  int n = p.dim;
  if (p.count < 1) throw ValidationError("random measure needs a positive count");
  if (!(p.mass_min > 0.0) || p.mass_max < p.mass_min) throw ValidationError("mass range must satisfy 0 < min <= max");
  std::vector<double> lower = p.box_lower.empty() ? std::vector<double>(n, 0.0) : p.box_lower;
  if (static_cast<int>(lower.size()) != n) throw ValidationError("bounding box has wrong dimension");
  Tick side = side_ticks(p.level);
  Tick box_side = snap(p.box_side, p.resolution);
  if (box_side < side || box_side % side != 0) {
    throw ValidationError("bounding box side must be a positive multiple of the tile side");
  }
  std::vector<Tick> origin(n);
  for (int k = 0; k < n; ++k) {
    origin[k] = snap(lower[k], p.resolution);
    if (origin[k] % side != 0) throw ValidationError("bounding box corner must be aligned to the tile level");
  }
  std::uint64_t per = static_cast<std::uint64_t>(box_side / side);
  std::uint64_t total = 1;
  for (int k = 0; k < n; ++k) {
    if (total > (std::uint64_t{1} << 40) / per) throw ValidationError("bounding box holds too many tiles");
    total *= per;
  }
  if (static_cast<std::uint64_t>(p.count) > total) throw ValidationError("more atoms requested than tiles available");
  Rng rng(p.seed);
  std::set<std::uint64_t> chosen;
  std::vector<std::uint64_t> order;
  while (order.size() < static_cast<std::size_t>(p.count)) {
    std::uint64_t t = uniform_index(rng, total);
    if (chosen.insert(t).second) order.push_back(t);
  }
  std::vector<Atom> atoms;
  for (std::uint64_t t : order) {
    Atom a;
    a.point.dim = n;
    std::uint64_t rest = t;
    for (int k = n - 1; k >= 0; --k) {
      a.point.x[k] = origin[k] + static_cast<Tick>(rest % per) * side + side / 2;
      rest /= per;
    }
    a.mass = p.mass_min + (p.mass_max - p.mass_min) * uniform01(rng);
    atoms.push_back(a);
  }
  return AtomicMeasure(n, std::move(atoms));
}

AtomicMeasure make_cantor(const GeneratorParams& p) {
  if (p.depth < 1) throw ValidationError("cantor depth must be at least 1");
  if (2 * p.depth + 1 > p.resolution) throw ValidationError("cantor depth too fine for the resolution");
  if (!(p.ratio > 0.0 && p.ratio < 1.0)) throw ValidationError("cantor ratio must lie in (0, 1)");
  // one-dimensional pieces: left endpoints and masses
  std::vector<std::pair<Tick, double>> pieces{{0, 1.0}};
  Tick len = kTicksPerUnit;
  for (int d = 0; d < p.depth; ++d) {
    std::vector<std::pair<Tick, double>> next;
    for (auto [a, m] : pieces) {
      next.push_back({a, m * p.ratio});
      next.push_back({a + 3 * (len / 4), m * (1.0 - p.ratio)});
    }
    pieces = std::move(next);
    len /= 4;
  }
  int n = p.dim;
  std::size_t per = pieces.size();
  std::size_t total = 1;
  for (int k = 0; k < n; ++k) {
    total *= per;
    if (total > (std::size_t{1} << 22)) throw ValidationError("cantor product too large");
  }
  std::vector<Atom> atoms;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Atom a;
    a.point.dim = n;
    a.mass = 1.0;
    std::size_t rest = idx;
    for (int k = n - 1; k >= 0; --k) {
      const auto& piece = pieces[rest % per];
      a.point.x[k] = piece.first + len / 2;
      a.mass *= piece.second;
      rest /= per;
    }
    atoms.push_back(a);
  }
  return AtomicMeasure(n, std::move(atoms));
}

AtomicMeasure make_points(const GeneratorParams& p) {
  if (p.points.size() != p.masses.size()) throw ValidationError("points and masses differ in length");
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    if (static_cast<int>(p.points[i].size()) != p.dim) throw ValidationError("point has wrong dimension");
    Atom a;
    a.point.dim = p.dim;
    for (int k = 0; k < p.dim; ++k) a.point.x[k] = snap(p.points[i][k], p.resolution);
    a.mass = p.masses[i];
    atoms.push_back(a);
  }
  return AtomicMeasure(p.dim, std::move(atoms));
}

}  // namespace

AtomicMeasure generate(const GeneratorParams& p) {
  check_dim(p.dim);
  check_resolution(p.resolution);
  if (p.kind == "lattice") return make_lattice(p);
  if (p.kind == "random_uniform") return make_random(p);
  if (p.kind == "cantor") return make_cantor(p);
  if (p.kind == "point_masses") return make_points(p);
  throw ValidationError("unknown generator kind '" + p.kind + "'");
}

GeneratorParams generator_from_json(const nlohmann::json& j) {
  GeneratorParams p;
  if (!j.is_object()) throw ValidationError("generator parameters must be an object");
  try {
    p.kind = j.value("kind", p.kind);
    p.dim = j.value("dim", p.dim);
    p.resolution = j.value("resolution", p.resolution);
    p.seed = j.value("seed", p.seed);
    p.level = j.value("level", p.level);
    p.count = j.value("count", p.count);
    p.box_lower = j.value("box_lower", p.box_lower);
    p.box_side = j.value("box_side", p.box_side);
    p.mass_min = j.value("mass_min", p.mass_min);
    p.mass_max = j.value("mass_max", p.mass_max);
    p.depth = j.value("depth", p.depth);
    p.ratio = j.value("ratio", p.ratio);
    p.points = j.value("points", p.points);
    p.masses = j.value("masses", p.masses);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad generator parameters: ") + e.what());
  }
  return p;
}

nlohmann::ordered_json generator_to_json(const GeneratorParams& p) {
  nlohmann::ordered_json j;
  j["kind"] = p.kind;
  j["dim"] = p.dim;
  j["resolution"] = p.resolution;
  j["seed"] = p.seed;
  if (p.kind == "lattice") {
    j["level"] = p.level;
  } else if (p.kind == "random_uniform") {
    j["level"] = p.level;
    j["count"] = p.count;
    j["box_lower"] = p.box_lower.empty() ? std::vector<double>(p.dim, 0.0) : p.box_lower;
    j["box_side"] = p.box_side;
    j["mass_min"] = p.mass_min;
    j["mass_max"] = p.mass_max;
  } else if (p.kind == "cantor") {
    j["depth"] = p.depth;
    j["ratio"] = p.ratio;
  } else {
    j["points"] = p.points;
    j["masses"] = p.masses;
  }
  return j;
}

nlohmann::ordered_json measure_to_json(const AtomicMeasure& m) {
  nlohmann::ordered_json j;
  j["dim"] = m.dim();
  auto atoms = nlohmann::ordered_json::array();
  for (const Atom& a : m.atoms()) {
    nlohmann::ordered_json pt = nlohmann::ordered_json::array();
    for (int k = 0; k < m.dim(); ++k) pt.push_back(to_decimal(a.point.x[k]));
    atoms.push_back({{"point", pt}, {"mass", a.mass}});
  }
  j["atoms"] = atoms;
  return j;
}

namespace {

Tick coordinate_from_json(const nlohmann::json& v, int resolution) {
  if (v.is_string()) return parse_decimal(v.get<std::string>(), resolution);
  if (v.is_number()) return snap(v.get<double>(), resolution);
  throw ValidationError("coordinates must be numbers or decimal strings");
}

}  // namespace

AtomicMeasure measure_from_json(const nlohmann::json& j, int resolution) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("atoms")) {
    throw ValidationError("measure JSON needs 'dim' and 'atoms'");
  }
  if (!j["dim"].is_number_integer()) throw ValidationError("'dim' must be an integer");
  int dim = j["dim"].get<int>();
  check_dim(dim);
  if (!j["atoms"].is_array()) throw ValidationError("'atoms' must be an array");
  std::vector<Atom> atoms;
  for (const auto& a : j["atoms"]) {
    if (!a.is_object() || !a.contains("point") || !a.contains("mass")) {
      throw ValidationError("each atom needs 'point' and 'mass'");
    }
    const auto& pt = a["point"];
    if (!pt.is_array() || static_cast<int>(pt.size()) != dim) throw ValidationError("atom point has wrong dimension");
    if (!a["mass"].is_number()) throw ValidationError("atom mass must be a number");
    Atom atom;
    atom.point.dim = dim;
    for (int k = 0; k < dim; ++k) atom.point.x[k] = coordinate_from_json(pt[k], resolution);
    atom.mass = a["mass"].get<double>();
    atoms.push_back(atom);
  }
  return AtomicMeasure(dim, std::move(atoms));
}

nlohmann::ordered_json cube_to_json(const Cube& q) {
  nlohmann::ordered_json j;
  auto lower = nlohmann::ordered_json::array();
  for (int k = 0; k < q.dim; ++k) lower.push_back(to_decimal(q.lower[k]));
  j["lower"] = lower;
  j["side"] = to_decimal(q.side());
  return j;
}

Cube cube_from_json(const nlohmann::json& j, int resolution) {
  if (!j.is_object() || !j.contains("lower") || !j.contains("side") || !j["lower"].is_array()) {
    throw ValidationError("cube JSON needs 'lower' and 'side'");
  }
  std::vector<Tick> lower;
  for (const auto& v : j["lower"]) lower.push_back(coordinate_from_json(v, resolution));
  Tick side = coordinate_from_json(j["side"], kTickBits);
  if (side <= 0 || (side & (side - 1)) != 0) throw ValidationError("cube side must be a power of two");
  int level = kTickBits;
  while (side_ticks(level) != side) --level;
  return make_cube(static_cast<int>(lower.size()), level, lower);
}

}  // namespace weightlab

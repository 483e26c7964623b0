#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "weightlab/geometry.hpp"

namespace weightlab {

struct Atom {
  Point point;
  double mass = 0.0;
};

// Finite positive combination of point masses. Atoms are kept sorted by point
// and distinct; colliding points are merged.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  AtomicMeasure(int dim, std::vector<Atom> atoms);

  int dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }

  double total_mass() const;
  double mass(const Cube& q) const;
  std::vector<int> indices_in(const Cube& q) const;
  // Mass at an exact point (0 if not an atom).
  double mass_at(const Point& p) const;
  int index_of(const Point& p) const;

  // Coordinates as doubles, dim entries per atom.
  const std::vector<double>& coords() const { return coords_; }
  const double* coord(std::size_t i) const { return coords_.data() + i * static_cast<std::size_t>(dim_); }

  // Smallest cube side hull: per-axis min/max of atom coordinates.
  void hull(std::vector<double>& lo, std::vector<double>& hi) const;

  AtomicMeasure scaled(double factor) const;

 private:
  int dim_ = 1;
  std::vector<Atom> atoms_;
  std::vector<double> coords_;
};

// Points carrying atoms of both measures.
std::vector<Point> common_points(const AtomicMeasure& a, const AtomicMeasure& b);

// |Q|_mu minus the largest mu-atom at a point of Q shared with other.
double punctured_mass(const AtomicMeasure& mu, const AtomicMeasure& other, const Cube& q);

// Generator parameters; see generate().
struct GeneratorParams {
  std::string kind = "lattice";  // lattice | random_uniform | cantor | point_masses
  int dim = 1;
  int resolution = kDefaultResolution;
  std::uint64_t seed = 1;
  // lattice: tile level; random_uniform: tile level atoms are drawn from
  int level = 4;
  // random_uniform
  int count = 16;
  std::vector<double> box_lower;  // defaults to the origin
  double box_side = 1.0;
  double mass_min = 0.1;
  double mass_max = 1.0;
  // cantor
  int depth = 3;
  double ratio = 0.5;  // mass share of the left piece
  // point_masses
  std::vector<std::vector<double>> points;
  std::vector<double> masses;
};

AtomicMeasure generate(const GeneratorParams& p);

GeneratorParams generator_from_json(const nlohmann::json& j);
nlohmann::ordered_json generator_to_json(const GeneratorParams& p);

// {"dim": n, "atoms": [{"point": ["0.25", ...], "mass": m}, ...]}
nlohmann::ordered_json measure_to_json(const AtomicMeasure& m);
AtomicMeasure measure_from_json(const nlohmann::json& j, int resolution = kDefaultResolution);

nlohmann::ordered_json cube_to_json(const Cube& q);
Cube cube_from_json(const nlohmann::json& j, int resolution = kTickBits);

}  // namespace weightlab

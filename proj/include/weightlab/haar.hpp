#pragma once

#include <map>
#include <vector>

#include "weightlab/measures.hpp"

namespace weightlab {

// Function on the atoms of a measure, indexed like AtomicMeasure::atoms().
using MuFunction = std::vector<double>;

struct HaarNode {
  Cube cube;
  double mass = 0.0;
  std::vector<Cube> kids;              // children with positive mass, lexicographic
  std::vector<std::vector<int>> atoms; // atom indices per kid
  std::vector<double> kid_mass;
  // funcs[a][c]: value of the a-th Haar function on kid c.
  std::vector<std::vector<double>> funcs;
};

// Weighted Haar basis of a measure on one grid; one node per grid cube with at
// least two charged children.
class HaarBasis {
 public:
  const AtomicMeasure& measure() const { return *mu_; }
  const Grid& grid() const { return grid_; }
  const std::vector<HaarNode>& nodes() const { return nodes_; }
  const std::vector<Cube>& roots() const { return roots_; }
  // Index of the node for q, or -1.
  int find(const Cube& q) const;
  std::size_t function_count() const;

 private:
  friend HaarBasis build_basis(const Grid&, const AtomicMeasure&, const Cube&);
  friend HaarBasis build_basis_all(const Grid&, const AtomicMeasure&);
  void add_tree(const Cube& root, std::vector<int> atoms);

  const AtomicMeasure* mu_ = nullptr;
  Grid grid_;
  std::vector<Cube> roots_;
  std::vector<HaarNode> nodes_;
  std::map<Cube, int> index_;
};

// Basis below a single grid cube containing every atom.
HaarBasis build_basis(const Grid& g, const AtomicMeasure& mu, const Cube& root);
// Bases below every charged top-level cube of the grid.
HaarBasis build_basis_all(const Grid& g, const AtomicMeasure& mu);

double avg(const AtomicMeasure& mu, const MuFunction& f, const Cube& q);
double coeff(const HaarBasis& b, const MuFunction& f, int node, int a);
// Martingale difference of f at node, as a function on all atoms.
MuFunction delta(const HaarBasis& b, const MuFunction& f, int node);
// Sum of martingale differences over nodes inside k.
MuFunction project(const HaarBasis& b, const MuFunction& f, const Cube& k);

double inner(const AtomicMeasure& mu, const MuFunction& f, const MuFunction& g);
double norm2(const AtomicMeasure& mu, const MuFunction& f);

// Haar function a of a node as a function on all atoms.
MuFunction haar_function(const HaarBasis& b, int node, int a);

// sum over atoms in j of mass |p - barycentre|^2.
double coordinate_energy(const AtomicMeasure& mu, const Cube& j);
double coordinate_energy(const AtomicMeasure& mu, const std::vector<int>& atoms);

}  // namespace weightlab

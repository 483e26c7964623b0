#pragma once

#include <string>
#include <vector>

#include "weightlab/operators.hpp"

namespace weightlab {

struct FamilySpec {
  int bottom = 10;
  int top = 0;
  // Grid 0 is the standard grid; the others are sampled from seed.
  int grids = 1;
  std::uint64_t seed = 1;
};

struct FamilyCube {
  Cube cube;
  int grid = 0;
  std::vector<int> sigma_atoms;
  std::vector<int> omega_atoms;
  double sigma_mass = 0.0;
  double omega_mass = 0.0;
};

// Grid cubes at levels top..bottom carrying mass of either measure, deduplicated
// by geometry. Cubes without mass are left out: no constant can see them.
struct CubeFamily {
  std::vector<Grid> grids;
  std::vector<FamilyCube> cubes;
};

CubeFamily build_family(const AtomicMeasure& sigma, const AtomicMeasure& omega, const FamilySpec& spec);

struct ConstantsConfig {
  KernelSpec kernel;
  GoodnessParams goodness;
  FamilySpec family;
  int d_part = 3;
  int ell_max = 2;
  std::vector<double> lambdas{0.25};
  NormOptions norm;
  int threads = 1;

  void validate() const;
};

struct Witness {
  std::vector<Cube> cubes;
  int grid = -1;
  int line = 0;
  int ell = 0;
};

struct ConstantEntry {
  double value = 0.0;
  Witness witness;
  bool attained = false;
  std::size_t skipped = 0;  // candidates with a zero denominator
};

struct RhsEntry {
  double lambda = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct ConstantsReport {
  ConstantEntry a2_offset;
  ConstantEntry a2_tail, a2_tail_star;
  ConstantEntry a2_punct, a2_punct_star;
  double frak_a2 = 0.0;
  ConstantEntry testing, testing_star;
  ConstantEntry full_testing, full_testing_star;
  ConstantEntry wbp;
  ConstantEntry touching;
  ConstantEntry energy, energy_star;
  // energy suprema of the partition line and the alternate-cube line
  double energy_parts[2] = {0, 0}, energy_star_parts[2] = {0, 0};
  NormResult norm;
  std::vector<RhsEntry> rhs;
  std::size_t family_size = 0;
  std::size_t grid_count = 0;
  int d_part = 0;
  int ell_max = 0;
  KernelSpec kernel;
};

// Evaluates every constant of a measure pair over one cube family.
class ConstantsEngine {
 public:
  ConstantsEngine(const AtomicMeasure& sigma, const AtomicMeasure& omega, ConstantsConfig cfg);

  const CubeFamily& family() const { return family_; }
  const ConstantsConfig& config() const { return cfg_; }

  ConstantEntry a2_offset() const;
  ConstantEntry a2_tail(bool star) const;
  ConstantEntry a2_punct(bool star) const;
  ConstantEntry testing(bool star) const;
  ConstantEntry full_testing(bool star) const;
  ConstantEntry wbp() const;
  ConstantEntry touching_indicator() const;
  // parts receives the two suprema whose sum is the squared constant
  ConstantEntry energy(bool star, double* parts = nullptr) const;
  NormResult norm() const;

  ConstantsReport full_report() const;

  // Value of a single candidate, used to re-check witnesses. Constants are
  // reported on their natural scale (square roots where they are quadratic).
  double a2_offset_at(const Cube& q, const Cube& qn) const;
  double a2_tail_at(const Cube& q, bool star) const;
  double a2_punct_at(const Cube& q, bool star) const;
  double testing_at(const Cube& q, bool star, bool full) const;
  double pair_at(const Cube& q_omega, const Cube& q_sigma) const;
  double energy_line1_at(const Cube& i, int grid, bool star) const;
  double energy_line2_at(const Cube& i, int grid, int ell, bool star) const;

 private:
  const AtomicMeasure& source(bool star) const { return star ? omega_ : sigma_; }
  const AtomicMeasure& target(bool star) const { return star ? sigma_ : omega_; }
  double pair_value(const std::vector<int>& w_atoms, const std::vector<int>& s_atoms) const;
  double testing_value(const std::vector<int>& src_atoms, const std::vector<int>& dst_atoms, bool star) const;
  double deep_energy(const Cube& k, const Cube& outer, const std::vector<int>& src_atoms,
                     const std::vector<int>& dst_atoms, bool star) const;
  double partition_energy(const Cube& piece, int depth, const Cube& outer, const std::vector<int>& src_atoms,
                          const std::vector<int>& dst_atoms, bool star) const;
  double energy_term(const Cube& j, const std::vector<int>& src_atoms, const std::vector<int>& dst_atoms,
                     bool star) const;

  const AtomicMeasure& sigma_;
  const AtomicMeasure& omega_;
  ConstantsConfig cfg_;
  CubeFamily family_;
  Eigen::MatrixXd kmat_;  // rows: omega atoms (per component), cols: sigma atoms
};

double good_lambda_rhs(const ConstantsReport& r, double lambda);

nlohmann::ordered_json report_to_json(const ConstantsReport& r);
nlohmann::ordered_json witness_to_json(const Witness& w);

ConstantsConfig constants_config_from_json(const nlohmann::json& j, const AtomicMeasure& sigma,
                                           const AtomicMeasure& omega);
nlohmann::ordered_json constants_config_to_json(const ConstantsConfig& c);

}  // namespace weightlab

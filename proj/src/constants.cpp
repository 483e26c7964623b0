#include "weightlab/constants.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "weightlab/util.hpp"

namespace weightlab {

namespace {

std::vector<int> filter_atoms(const AtomicMeasure& mu, const std::vector<int>& from, const Cube& q) {
  std::vector<int> out;
  for (int i : from) {
    if (q.contains(mu[i].point)) out.push_back(i);
  }
  return out;
}

double mass_of(const AtomicMeasure& mu, const std::vector<int>& atoms) {
  Accumulator acc;
  for (int i : atoms) acc += mu[i].mass;
  return acc.value();
}

// Picks the largest candidate; ties keep the earliest, which is the
// lexicographically smallest because candidates are visited in order.
struct Best {
  double value = 0.0;
  Witness witness;
  bool attained = false;

  void offer(double v, const Witness& w) {
    if (!attained || v > value) {
      value = v;
      witness = w;
      attained = true;
    }
  }
  void merge(const Best& other) {
    if (other.attained) offer(other.value, other.witness);
  }
  ConstantEntry entry(std::size_t skipped = 0) const {
    ConstantEntry e;
    e.value = value;
    e.witness = witness;
    e.attained = attained;
    e.skipped = skipped;
    return e;
  }
};

Witness witness_of(std::vector<Cube> cubes, int grid = -1) {
  Witness w;
  w.cubes = std::move(cubes);
  w.grid = grid;
  return w;
}

}  // namespace

CubeFamily build_family(const AtomicMeasure& sigma, const AtomicMeasure& omega, const FamilySpec& spec) {
  if (sigma.dim() != omega.dim()) throw ValidationError("measures have different dimensions");
  validate_grid_levels(sigma.dim(), spec.bottom, spec.top);
  if (spec.grids < 1) throw ValidationError("family needs at least one grid");
  CubeFamily fam;
  int n = sigma.dim();
  fam.grids.push_back(standard_grid(n, spec.bottom, spec.top));
  for (int g = 1; g < spec.grids; ++g) {
    fam.grids.push_back(sample_grid(n, spec.bottom, spec.top, derive_seed(spec.seed, static_cast<std::uint64_t>(g))));
  }
  std::map<Cube, std::size_t> seen;
  for (std::size_t g = 0; g < fam.grids.size(); ++g) {
    const Grid& grid = fam.grids[g];
    for (int lev = spec.top; lev <= spec.bottom; ++lev) {
      std::map<Cube, std::pair<std::vector<int>, std::vector<int>>> here;
      for (std::size_t i = 0; i < sigma.size(); ++i) here[grid.cube_at(sigma[i].point, lev)].first.push_back(static_cast<int>(i));
      for (std::size_t i = 0; i < omega.size(); ++i) here[grid.cube_at(omega[i].point, lev)].second.push_back(static_cast<int>(i));
      for (auto& [cube, atoms] : here) {
        if (seen.count(cube)) continue;
        seen[cube] = fam.cubes.size();
        FamilyCube fc;
        fc.cube = cube;
        fc.grid = static_cast<int>(g);
        fc.sigma_atoms = std::move(atoms.first);
        fc.omega_atoms = std::move(atoms.second);
        fc.sigma_mass = mass_of(sigma, fc.sigma_atoms);
        fc.omega_mass = mass_of(omega, fc.omega_atoms);
        fam.cubes.push_back(std::move(fc));
      }
    }
  }
  std::sort(fam.cubes.begin(), fam.cubes.end(), [](const FamilyCube& a, const FamilyCube& b) { return a.cube < b.cube; });
  return fam;
}

void ConstantsConfig::validate() const {
  kernel.validate();
  goodness.validate();
  validate_grid_levels(kernel.dim, family.bottom, family.top);
  if (family.grids < 1) throw ValidationError("family needs at least one grid");
  if (d_part < 1) throw ValidationError("partition depth must be at least 1");
  if (ell_max < 0) throw ValidationError("refinement order must be non-negative");
  for (double l : lambdas) {
    if (!(l > 0.0 && l < 1.0)) throw ValidationError("lambda must lie in (0, 1)");
  }
}

ConstantsEngine::ConstantsEngine(const AtomicMeasure& sigma, const AtomicMeasure& omega, ConstantsConfig cfg)
    : sigma_(sigma), omega_(omega), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (sigma.dim() != cfg_.kernel.dim || omega.dim() != cfg_.kernel.dim) {
    throw ValidationError("kernel and measure dimensions differ");
  }
  family_ = build_family(sigma_, omega_, cfg_.family);
  kmat_ = kernel_matrix(cfg_.kernel, omega_, sigma_, cfg_.threads);
}

double ConstantsEngine::a2_offset_at(const Cube& q, const Cube& qn) const {
  double scale = std::pow(q.side_length(), 2.0 * (q.dim - cfg_.kernel.alpha));
  return sigma_.mass(q) * omega_.mass(qn) / scale;
}

ConstantEntry ConstantsEngine::a2_offset() const {
  Best best;
  double twice = 2.0 * (sigma_.dim() - cfg_.kernel.alpha);
  for (const FamilyCube& fc : family_.cubes) {
    if (fc.sigma_mass == 0.0) continue;
    double scale = std::pow(fc.cube.side_length(), twice);
    for (const Cube& s : triadic_siblings(fc.cube)) {
      if (s == fc.cube) continue;
      double w = omega_.mass(s);
      best.offer(fc.sigma_mass * w / scale, witness_of({fc.cube, s}, fc.grid));
    }
  }
  return best.entry();
}

double ConstantsEngine::a2_tail_at(const Cube& q, bool star) const {
  const AtomicMeasure& src = source(star);
  const AtomicMeasure& dst = target(star);
  int n = q.dim;
  double p = n - cfg_.kernel.alpha;
  double l = q.side_length();
  double c[kMaxDim];
  q.center(c);
  Accumulator poisson;
  for (std::size_t j = 0; j < src.size(); ++j) {
    if (q.contains(src[j].point)) continue;
    double d2 = 0.0;
    for (int k = 0; k < n; ++k) d2 += (src.coord(j)[k] - c[k]) * (src.coord(j)[k] - c[k]);
    double base = l / ((l + std::sqrt(d2)) * (l + std::sqrt(d2)));
    poisson += src[j].mass * std::pow(base, p);
  }
  return poisson.value() * dst.mass(q) / std::pow(l, p);
}

ConstantEntry ConstantsEngine::a2_tail(bool star) const {
  Best best;
  for (const FamilyCube& fc : family_.cubes) {
    if ((star ? fc.sigma_mass : fc.omega_mass) == 0.0) continue;
    best.offer(a2_tail_at(fc.cube, star), witness_of({fc.cube}, fc.grid));
  }
  return best.entry();
}

double ConstantsEngine::a2_punct_at(const Cube& q, bool star) const {
  double scale = std::pow(q.side_length(), 2.0 * (q.dim - cfg_.kernel.alpha));
  if (!star) return punctured_mass(omega_, sigma_, q) * sigma_.mass(q) / scale;
  return punctured_mass(sigma_, omega_, q) * omega_.mass(q) / scale;
}

ConstantEntry ConstantsEngine::a2_punct(bool star) const {
  Best best;
  for (const FamilyCube& fc : family_.cubes) {
    if (fc.sigma_mass == 0.0 || fc.omega_mass == 0.0) continue;
    best.offer(a2_punct_at(fc.cube, star), witness_of({fc.cube}, fc.grid));
  }
  return best.entry();
}

double ConstantsEngine::testing_value(const std::vector<int>& src_atoms, const std::vector<int>& dst_atoms,
                                      bool star) const {
  const AtomicMeasure& src = source(star);
  const AtomicMeasure& dst = target(star);
  double m = mass_of(src, src_atoms);
  if (m == 0.0) return 0.0;
  int comps = cfg_.kernel.components();
  Eigen::Index rows = static_cast<Eigen::Index>(omega_.size());
  Accumulator total;
  for (int d : dst_atoms) {
    double sq = 0.0;
    for (int c = 0; c < comps; ++c) {
      Accumulator v;
      for (int s : src_atoms) {
        double kv = star ? kmat_(c * rows + s, d) : kmat_(c * rows + d, s);
        v += kv * src[s].mass;
      }
      sq += v.value() * v.value();
    }
    total += dst[d].mass * sq;
  }
  return total.value() / m;
}

double ConstantsEngine::testing_at(const Cube& q, bool star, bool full) const {
  std::vector<int> src_atoms = source(star).indices_in(q);
  std::vector<int> dst_atoms;
  if (full) {
    for (std::size_t i = 0; i < target(star).size(); ++i) dst_atoms.push_back(static_cast<int>(i));
  } else {
    dst_atoms = target(star).indices_in(q);
  }
  return std::sqrt(testing_value(src_atoms, dst_atoms, star));
}

ConstantEntry ConstantsEngine::testing(bool star) const {
  std::vector<Best> local(family_.cubes.size());
  parallel_for(family_.cubes.size(), cfg_.threads, [&](std::size_t i) {
    const FamilyCube& fc = family_.cubes[i];
    const auto& src = star ? fc.omega_atoms : fc.sigma_atoms;
    const auto& dst = star ? fc.sigma_atoms : fc.omega_atoms;
    if (src.empty()) return;
    local[i].offer(testing_value(src, dst, star), witness_of({fc.cube}, fc.grid));
  });
  Best best;
  for (const Best& b : local) best.merge(b);
  best.value = std::sqrt(best.value);
  return best.entry();
}

ConstantEntry ConstantsEngine::full_testing(bool star) const {
  std::vector<int> all;
  for (std::size_t i = 0; i < target(star).size(); ++i) all.push_back(static_cast<int>(i));
  std::vector<Best> local(family_.cubes.size());
  parallel_for(family_.cubes.size(), cfg_.threads, [&](std::size_t i) {
    const FamilyCube& fc = family_.cubes[i];
    const auto& src = star ? fc.omega_atoms : fc.sigma_atoms;
    if (src.empty()) return;
    local[i].offer(testing_value(src, all, star), witness_of({fc.cube}, fc.grid));
  });
  Best best;
  for (const Best& b : local) best.merge(b);
  best.value = std::sqrt(best.value);
  return best.entry();
}

double ConstantsEngine::pair_value(const std::vector<int>& w_atoms, const std::vector<int>& s_atoms) const {
  double wm = mass_of(omega_, w_atoms), sm = mass_of(sigma_, s_atoms);
  if (wm == 0.0 || sm == 0.0) return 0.0;
  int comps = cfg_.kernel.components();
  Eigen::Index rows = static_cast<Eigen::Index>(omega_.size());
  double sq = 0.0;
  for (int c = 0; c < comps; ++c) {
    Accumulator acc;
    for (int i : w_atoms) {
      Accumulator inner_sum;
      for (int j : s_atoms) inner_sum += kmat_(c * rows + i, j) * sigma_[j].mass;
      acc += omega_[i].mass * inner_sum.value();
    }
    sq += acc.value() * acc.value();
  }
  return std::sqrt(sq) / std::sqrt(wm * sm);
}

double ConstantsEngine::pair_at(const Cube& q_omega, const Cube& q_sigma) const {
  return pair_value(omega_.indices_in(q_omega), sigma_.indices_in(q_sigma));
}

namespace {

bool separated_pair(const Cube& a, const Cube& b) {
  if (interiors_intersect(a, b)) return false;
  return inside_triple(a, b) || inside_triple(b, a);
}

}  // namespace

ConstantEntry ConstantsEngine::wbp() const {
  // candidates sorted by their first lower coordinate for a windowed scan
  std::vector<std::size_t> src;
  for (std::size_t i = 0; i < family_.cubes.size(); ++i) {
    if (family_.cubes[i].sigma_mass > 0.0) src.push_back(i);
  }
  std::vector<std::size_t> by_x = src;
  std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) {
    return family_.cubes[a].cube.lower[0] < family_.cubes[b].cube.lower[0];
  });
  Tick max_side = 0;
  for (std::size_t i : src) max_side = std::max(max_side, family_.cubes[i].cube.side());
  int rho = cfg_.goodness.rho;

  struct Local {
    Best wbp, touch;
  };
  std::vector<Local> local(family_.cubes.size());
  parallel_for(family_.cubes.size(), cfg_.threads, [&](std::size_t qi) {
    const FamilyCube& q = family_.cubes[qi];
    if (q.omega_mass == 0.0) return;
    Tick reach = 3 * std::max(q.cube.side(), max_side);
    Tick lo = q.cube.lower[0] - reach, hi = q.cube.upper(0) + reach;
    auto first = std::lower_bound(by_x.begin(), by_x.end(), lo, [&](std::size_t a, Tick v) {
      return family_.cubes[a].cube.lower[0] < v;
    });
    std::vector<std::size_t> cands;
    for (auto it = first; it != by_x.end() && family_.cubes[*it].cube.lower[0] <= hi; ++it) cands.push_back(*it);
    std::sort(cands.begin(), cands.end());
    for (std::size_t pi : cands) {
      const FamilyCube& p = family_.cubes[pi];
      if (std::abs(p.cube.level - q.cube.level) > rho) continue;
      if (!separated_pair(q.cube, p.cube)) continue;
      double v = pair_value(q.omega_atoms, p.sigma_atoms);
      Witness w = witness_of({q.cube, p.cube});
      local[qi].wbp.offer(v, w);
      if (touching(q.cube, p.cube)) local[qi].touch.offer(v, w);
    }
  });
  Best best;
  for (const Local& l : local) best.merge(l.wbp);
  return best.entry();
}

ConstantEntry ConstantsEngine::touching_indicator() const {
  std::vector<std::size_t> src;
  for (std::size_t i = 0; i < family_.cubes.size(); ++i) {
    if (family_.cubes[i].sigma_mass > 0.0) src.push_back(i);
  }
  int rho = cfg_.goodness.rho;
  std::vector<Best> local(family_.cubes.size());
  parallel_for(family_.cubes.size(), cfg_.threads, [&](std::size_t qi) {
    const FamilyCube& q = family_.cubes[qi];
    if (q.omega_mass == 0.0) return;
    for (std::size_t pi : src) {
      const FamilyCube& p = family_.cubes[pi];
      if (std::abs(p.cube.level - q.cube.level) > rho) continue;
      if (!touching(q.cube, p.cube) || !separated_pair(q.cube, p.cube)) continue;
      local[qi].offer(pair_value(q.omega_atoms, p.sigma_atoms), witness_of({q.cube, p.cube}));
    }
  });
  Best best;
  for (const Best& b : local) best.merge(b);
  return best.entry();
}

double ConstantsEngine::energy_term(const Cube& j, const std::vector<int>& src_atoms,
                                    const std::vector<int>& dst_atoms, bool star) const {
  const AtomicMeasure& src = source(star);
  int n = j.dim;
  double l = j.side_length();
  double c[kMaxDim];
  j.center(c);
  double expo = n + 1.0 - cfg_.kernel.alpha;
  Accumulator p;
  for (int s : src_atoms) {
    double d2 = 0.0;
    for (int k = 0; k < n; ++k) d2 += (src.coord(s)[k] - c[k]) * (src.coord(s)[k] - c[k]);
    p += src[s].mass * l / std::pow(l + std::sqrt(d2), expo);
  }
  double ratio = p.value() / l;
  return ratio * ratio * coordinate_energy(target(star), dst_atoms);
}

double ConstantsEngine::deep_energy(const Cube& k, const Cube& outer, const std::vector<int>& src_atoms,
                                    const std::vector<int>& dst_atoms, bool star) const {
  (void)outer;
  const AtomicMeasure& dst = target(star);
  auto keep = [&](const Cube& j) {
    int count = 0;
    for (int d : dst_atoms) {
      if (j.contains(dst[d].point) && ++count >= 2) return true;
    }
    return false;
  };
  Accumulator sum;
  for (const Cube& j : maximal_deep_subcubes(k, cfg_.family.bottom, cfg_.goodness, keep)) {
    sum += energy_term(j, src_atoms, filter_atoms(dst, dst_atoms, j), star);
  }
  return sum.value();
}

double ConstantsEngine::partition_energy(const Cube& piece, int depth, const Cube& outer,
                                         const std::vector<int>& src_atoms, const std::vector<int>& dst_atoms,
                                         bool star) const {
  if (dst_atoms.size() < 2) return 0.0;
  double whole = deep_energy(piece, outer, src_atoms, dst_atoms, star);
  if (depth <= 0 || piece.level >= cfg_.family.bottom) return whole;
  Accumulator split;
  for (const Cube& c : children(piece)) {
    split += partition_energy(c, depth - 1, outer, src_atoms, filter_atoms(target(star), dst_atoms, c), star);
  }
  return std::max(whole, split.value());
}

double ConstantsEngine::energy_line1_at(const Cube& i, int grid, bool star) const {
  (void)grid;
  std::vector<int> src_atoms = source(star).indices_in(i);
  double m = mass_of(source(star), src_atoms);
  if (m == 0.0) return 0.0;
  std::vector<int> dst_atoms = target(star).indices_in(i);
  return partition_energy(i, cfg_.d_part, i, src_atoms, dst_atoms, star) / m;
}

double ConstantsEngine::energy_line2_at(const Cube& i, int grid, int ell, bool star) const {
  const Grid& g = family_.grids.at(static_cast<std::size_t>(grid));
  std::vector<int> src_atoms = source(star).indices_in(i);
  double m = mass_of(source(star), src_atoms);
  if (m == 0.0) return 0.0;
  std::vector<int> dst_atoms = target(star).indices_in(i);
  if (dst_atoms.size() < 2) return 0.0;
  if (i.level + 1 - ell < g.top) return 0.0;
  const AtomicMeasure& dst = target(star);
  auto keep = [&](const Cube& j) {
    int count = 0;
    for (int d : dst_atoms) {
      if (j.contains(dst[d].point) && ++count >= 2) return true;
    }
    return false;
  };
  Accumulator sum;
  for (const Cube& j : refined_deep_subcubes(i, ell, g, cfg_.goodness, keep)) {
    sum += energy_term(j, src_atoms, filter_atoms(dst, dst_atoms, j), star);
  }
  return sum.value() / m;
}

ConstantEntry ConstantsEngine::energy(bool star, double* parts) const {
  // line 1: recursive partitions of family cubes
  std::vector<Best> l1(family_.cubes.size());
  parallel_for(family_.cubes.size(), cfg_.threads, [&](std::size_t i) {
    const FamilyCube& fc = family_.cubes[i];
    const auto& dst = star ? fc.sigma_atoms : fc.omega_atoms;
    if ((star ? fc.omega_mass : fc.sigma_mass) == 0.0 || dst.size() < 2) return;
    Witness w = witness_of({fc.cube}, fc.grid);
    w.line = 1;
    l1[i].offer(energy_line1_at(fc.cube, fc.grid, star), w);
  });
  Best b1;
  for (const Best& b : l1) b1.merge(b);

  // line 2: alternate cubes of every family cube
  std::set<std::pair<Cube, int>> alts;
  for (const FamilyCube& fc : family_.cubes) {
    if (fc.cube.level - 1 < kCoarsestLevel) continue;
    for (const Cube& a : alternate_cubes(fc.cube, family_.grids[static_cast<std::size_t>(fc.grid)])) {
      alts.insert({a, fc.grid});
    }
  }
  std::vector<std::pair<Cube, int>> alt_list(alts.begin(), alts.end());
  std::vector<Best> l2(alt_list.size());
  parallel_for(alt_list.size(), cfg_.threads, [&](std::size_t i) {
    const auto& [cube, grid] = alt_list[i];
    const Grid& g = family_.grids[static_cast<std::size_t>(grid)];
    for (int ell = 0; ell <= cfg_.ell_max; ++ell) {
      if (ell > 0 && cube.level + 1 - ell < g.top) break;
      Witness w = witness_of({cube}, grid);
      w.line = 2;
      w.ell = ell;
      l2[i].offer(energy_line2_at(cube, grid, ell, star), w);
    }
  });
  Best b2;
  for (const Best& b : l2) b2.merge(b);

  if (parts) {
    parts[0] = b1.value;
    parts[1] = b2.value;
  }
  ConstantEntry e;
  e.value = std::sqrt(b1.value + b2.value);
  e.attained = b1.attained || b2.attained;
  // witness: line-1 cube then line-2 cube, grid and order of the latter
  e.witness.line = (b1.attained ? 1 : 0) | (b2.attained ? 2 : 0);
  if (b1.attained) e.witness.cubes.push_back(b1.witness.cubes[0]);
  if (b2.attained) {
    e.witness.cubes.push_back(b2.witness.cubes[0]);
    e.witness.grid = b2.witness.grid;
    e.witness.ell = b2.witness.ell;
  }
  return e;
}

NormResult ConstantsEngine::norm() const {
  return operator_norm(cfg_.kernel, sigma_, omega_, cfg_.norm, cfg_.threads);
}

double good_lambda_rhs(const ConstantsReport& r, double lambda) {
  return std::sqrt(r.frak_a2) / lambda + r.testing.value + r.testing_star.value + r.energy.value +
         r.energy_star.value + std::pow(lambda, 0.25) * r.norm.value;
}

ConstantsReport ConstantsEngine::full_report() const {
  ConstantsReport r;
  r.kernel = cfg_.kernel;
  r.family_size = family_.cubes.size();
  r.grid_count = family_.grids.size();
  r.d_part = cfg_.d_part;
  r.ell_max = cfg_.ell_max;
  r.a2_offset = a2_offset();
  r.a2_tail = a2_tail(false);
  r.a2_tail_star = a2_tail(true);
  r.a2_punct = a2_punct(false);
  r.a2_punct_star = a2_punct(true);
  r.frak_a2 = r.a2_tail.value + r.a2_tail_star.value + r.a2_punct.value + r.a2_punct_star.value;
  r.testing = testing(false);
  r.testing_star = testing(true);
  r.full_testing = full_testing(false);
  r.full_testing_star = full_testing(true);
  r.wbp = wbp();
  r.touching = touching_indicator();
  r.energy = energy(false, r.energy_parts);
  r.energy_star = energy(true, r.energy_star_parts);
  r.norm = norm();
  for (double l : cfg_.lambdas) {
    RhsEntry e;
    e.lambda = l;
    e.rhs = good_lambda_rhs(r, l);
    e.ratio = e.rhs > 0.0 ? r.wbp.value / e.rhs : 0.0;
    r.rhs.push_back(e);
  }
  return r;
}

nlohmann::ordered_json witness_to_json(const Witness& w) {
  nlohmann::ordered_json j;
  auto cubes = nlohmann::ordered_json::array();
  for (const Cube& c : w.cubes) cubes.push_back(cube_to_json(c));
  j["cubes"] = cubes;
  if (w.grid >= 0) j["grid"] = w.grid;
  if (w.line) j["line"] = w.line;
  if (w.line & 2) j["ell"] = w.ell;
  return j;
}

namespace {

nlohmann::ordered_json entry_json(const ConstantEntry& e) {
  nlohmann::ordered_json j;
  j["value"] = e.value;
  j["attained"] = e.attained;
  if (e.attained) j["witness"] = witness_to_json(e.witness);
  if (e.skipped) j["skipped"] = e.skipped;
  return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const ConstantsReport& r) {
  nlohmann::ordered_json j;
  j["A2_offset"] = entry_json(r.a2_offset);
  j["A2_tail"] = entry_json(r.a2_tail);
  j["A2_tail_star"] = entry_json(r.a2_tail_star);
  j["A2_punct"] = entry_json(r.a2_punct);
  j["A2_punct_star"] = entry_json(r.a2_punct_star);
  j["frakA2"] = r.frak_a2;
  j["testing"] = entry_json(r.testing);
  j["testing_star"] = entry_json(r.testing_star);
  j["full_testing"] = entry_json(r.full_testing);
  j["full_testing_star"] = entry_json(r.full_testing_star);
  j["WBP"] = entry_json(r.wbp);
  j["touching"] = entry_json(r.touching);
  j["energy"] = entry_json(r.energy);
  j["energy"]["line_sups"] = {r.energy_parts[0], r.energy_parts[1]};
  j["energy_star"] = entry_json(r.energy_star);
  j["energy_star"]["line_sups"] = {r.energy_star_parts[0], r.energy_star_parts[1]};
  // the partition line searches dyadic partitions only
  j["energy_partitions"] = {{"kind", "dyadic"}, {"max_depth", r.d_part}, {"ell_max", r.ell_max}};
  nlohmann::ordered_json nj;
  nj["value"] = r.norm.value;
  nj["method"] = r.norm.method;
  nj["converged"] = r.norm.converged;
  nj["bracket"] = {r.norm.lower, r.norm.upper};
  if (r.norm.method == "power") nj["iterations"] = r.norm.iterations;
  j["norm"] = nj;
  auto rhs = nlohmann::ordered_json::array();
  for (const RhsEntry& e : r.rhs) rhs.push_back({{"lambda", e.lambda}, {"rhs", e.rhs}, {"ratio", e.ratio}});
  j["good_lambda"] = rhs;
  j["family"] = {{"cubes", r.family_size}, {"grids", r.grid_count}};
  return j;
}

ConstantsConfig constants_config_from_json(const nlohmann::json& j, const AtomicMeasure& sigma,
                                           const AtomicMeasure& omega) {
  if (!j.is_object()) throw ValidationError("constants config must be an object");
  ConstantsConfig c;
  try {
    int dim = sigma.dim();
    double alpha = j.value("alpha", 0.0);
    int component = 0;
    if (j.contains("component")) {
      if (j["component"].is_string()) {
        if (j["component"].get<std::string>() != "vector") throw ValidationError("component must be an index or \"vector\"");
        component = kVectorKernel;
      } else {
        component = j["component"].get<int>();
      }
    }
    KernelSpec probe;
    probe.dim = dim;
    probe.alpha = alpha;
    probe.component = component;
    probe.truncation = Truncation::none;
    probe.validate();
    c.kernel = default_kernel(dim, alpha, component, sigma, omega);
    std::string trunc = j.value("truncation", std::string("tangent"));
    if (trunc == "none") {
      c.kernel.truncation = Truncation::none;
    } else if (trunc != "tangent") {
      throw ValidationError("truncation must be 'tangent' or 'none'");
    }
    c.kernel.delta = j.value("delta", c.kernel.delta);
    c.kernel.R = j.value("R", c.kernel.R);
    int r = j.value("r", 6);
    c.goodness = GoodnessParams::with_r(r, j.value("eps", 0.45));
    c.goodness.rho = j.value("rho", c.goodness.rho);
    c.goodness.tau = j.value("tau", c.goodness.tau);
    c.goodness.strict_tau = j.value("strict_tau", false);
    c.family.bottom = j.value("M", c.family.bottom);
    c.family.top = j.value("N", c.family.top);
    c.family.grids = j.value("grids", c.family.grids);
    c.family.seed = j.value("seed", c.family.seed);
    c.d_part = j.value("d_part", c.d_part);
    c.ell_max = j.value("ell_max", c.ell_max);
    if (j.contains("lambda")) {
      c.lambdas = j["lambda"].is_array() ? j["lambda"].get<std::vector<double>>()
                                         : std::vector<double>{j["lambda"].get<double>()};
    }
    c.norm.method = j.value("norm_method", c.norm.method);
    c.threads = resolve_threads(j.value("threads", 0));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad constants config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json constants_config_to_json(const ConstantsConfig& c) {
  nlohmann::ordered_json j;
  j["alpha"] = c.kernel.alpha;
  if (c.kernel.component == kVectorKernel) {
    j["component"] = "vector";
  } else {
    j["component"] = c.kernel.component;
  }
  j["truncation"] = c.kernel.truncation == Truncation::tangent ? "tangent" : "none";
  j["delta"] = c.kernel.delta;
  j["R"] = c.kernel.R;
  j["r"] = c.goodness.r;
  j["eps"] = c.goodness.eps;
  j["rho"] = c.goodness.rho;
  j["tau"] = c.goodness.tau;
  j["strict_tau"] = c.goodness.strict_tau;
  j["M"] = c.family.bottom;
  j["N"] = c.family.top;
  j["grids"] = c.family.grids;
  j["seed"] = c.family.seed;
  j["d_part"] = c.d_part;
  j["ell_max"] = c.ell_max;
  j["lambda"] = c.lambdas;
  j["norm_method"] = c.norm.method;
  return j;
}

}  // namespace weightlab

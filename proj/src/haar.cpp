#include "weightlab/haar.hpp"

#include <algorithm>
#include <cmath>

#include "weightlab/util.hpp"

namespace weightlab {

int HaarBasis::find(const Cube& q) const {
  auto it = index_.find(q);
  return it == index_.end() ? -1 : it->second;
}

std::size_t HaarBasis::function_count() const {
  std::size_t c = 0;
  for (const auto& n : nodes_) c += n.funcs.size();
  return c;
}

namespace {

double weighted_dot(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& w) {
  Accumulator acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i] * w[i];
  return acc.value();
}

// Orthonormal basis of the mean-zero functions constant on the kids.
std::vector<std::vector<double>> node_functions(const std::vector<double>& kid_mass, double total) {
  std::size_t k = kid_mass.size();
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    std::vector<double> v(k, -kid_mass[i] / total);
    v[i] += 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : out) {
        double c = weighted_dot(v, u, kid_mass);
        for (std::size_t j = 0; j < k; ++j) v[j] -= c * u[j];
      }
    }
    double nrm = std::sqrt(weighted_dot(v, v, kid_mass));
    if (!(nrm > 1e-14)) continue;
    for (double& x : v) x /= nrm;
    auto first = std::find_if(v.begin(), v.end(), [](double x) { return x != 0.0; });
    if (first != v.end() && *first > 0.0) {
      for (double& x : v) x = -x;
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

void HaarBasis::add_tree(const Cube& root, std::vector<int> atoms) {
  roots_.push_back(root);
  struct Item {
    Cube cube;
    std::vector<int> atoms;
  };
  std::vector<Item> stack{{root, std::move(atoms)}};
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    if (it.atoms.size() <= 1) continue;
    if (it.cube.level >= grid_.bottom) {
      throw ValidationError("grid depth does not resolve the atoms in " + describe(it.cube));
    }
    auto kids = children(it.cube);
    std::vector<std::vector<int>> split(kids.size());
    for (int a : it.atoms) {
      for (std::size_t c = 0; c < kids.size(); ++c) {
        if (kids[c].contains((*mu_)[a].point)) {
          split[c].push_back(a);
          break;
        }
      }
    }
    HaarNode node;
    node.cube = it.cube;
    Accumulator total;
    for (std::size_t c = 0; c < kids.size(); ++c) {
      if (split[c].empty()) continue;
      Accumulator m;
      for (int a : split[c]) m += (*mu_)[a].mass;
      node.kids.push_back(kids[c]);
      node.atoms.push_back(split[c]);
      node.kid_mass.push_back(m.value());
      total += m.value();
    }
    node.mass = total.value();
    for (std::size_t c = node.kids.size(); c-- > 0;) stack.push_back({node.kids[c], node.atoms[c]});
    if (node.kids.size() >= 2) {
      node.funcs = node_functions(node.kid_mass, node.mass);
      index_[node.cube] = static_cast<int>(nodes_.size());
      nodes_.push_back(std::move(node));
    }
  }
}

HaarBasis build_basis(const Grid& g, const AtomicMeasure& mu, const Cube& root) {
  if (!g.has(root)) throw ValidationError("basis root must be a grid cube");
  if (root.dim != mu.dim()) throw ValidationError("basis root dimension mismatch");
  std::vector<int> all;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!root.contains(mu[i].point)) throw ValidationError("measure is not supported in the basis root");
    all.push_back(static_cast<int>(i));
  }
  HaarBasis b;
  b.mu_ = &mu;
  b.grid_ = g;
  b.add_tree(root, std::move(all));
  return b;
}

HaarBasis build_basis_all(const Grid& g, const AtomicMeasure& mu) {
  if (g.dim != mu.dim()) throw ValidationError("grid and measure dimensions differ");
  std::map<Cube, std::vector<int>> tops;
  for (std::size_t i = 0; i < mu.size(); ++i) tops[g.cube_at(mu[i].point, g.top)].push_back(static_cast<int>(i));
  HaarBasis b;
  b.mu_ = &mu;
  b.grid_ = g;
  for (auto& [cube, atoms] : tops) b.add_tree(cube, std::move(atoms));
  return b;
}

double avg(const AtomicMeasure& mu, const MuFunction& f, const Cube& q) {
  Accumulator num, den;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (q.contains(mu[i].point)) {
      num += f[i] * mu[i].mass;
      den += mu[i].mass;
    }
  }
  if (den.value() == 0.0) return 0.0;
  return num.value() / den.value();
}

double coeff(const HaarBasis& b, const MuFunction& f, int node, int a) {
  const HaarNode& nd = b.nodes().at(node);
  const auto& mu = b.measure();
  Accumulator acc;
  for (std::size_t c = 0; c < nd.kids.size(); ++c) {
    for (int i : nd.atoms[c]) acc += f[i] * mu[i].mass * nd.funcs[a][c];
  }
  return acc.value();
}

MuFunction delta(const HaarBasis& b, const MuFunction& f, int node) {
  const HaarNode& nd = b.nodes().at(node);
  MuFunction out(b.measure().size(), 0.0);
  for (std::size_t a = 0; a < nd.funcs.size(); ++a) {
    double c = coeff(b, f, node, static_cast<int>(a));
    for (std::size_t k = 0; k < nd.kids.size(); ++k) {
      for (int i : nd.atoms[k]) out[i] += c * nd.funcs[a][k];
    }
  }
  return out;
}

MuFunction project(const HaarBasis& b, const MuFunction& f, const Cube& k) {
  MuFunction out(b.measure().size(), 0.0);
  for (std::size_t n = 0; n < b.nodes().size(); ++n) {
    if (!k.contains(b.nodes()[n].cube)) continue;
    MuFunction d = delta(b, f, static_cast<int>(n));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  return out;
}

MuFunction haar_function(const HaarBasis& b, int node, int a) {
  const HaarNode& nd = b.nodes().at(node);
  MuFunction out(b.measure().size(), 0.0);
  for (std::size_t k = 0; k < nd.kids.size(); ++k) {
    for (int i : nd.atoms[k]) out[i] = nd.funcs[a][k];
  }
  return out;
}

double inner(const AtomicMeasure& mu, const MuFunction& f, const MuFunction& g) {
  Accumulator acc;
  for (std::size_t i = 0; i < mu.size(); ++i) acc += f[i] * g[i] * mu[i].mass;
  return acc.value();
}

double norm2(const AtomicMeasure& mu, const MuFunction& f) { return std::sqrt(inner(mu, f, f)); }

double coordinate_energy(const AtomicMeasure& mu, const std::vector<int>& atoms) {
  int n = mu.dim();
  Accumulator m;
  std::vector<Accumulator> first(n);
  for (int i : atoms) {
    m += mu[i].mass;
    for (int k = 0; k < n; ++k) first[k] += mu[i].mass * mu.coord(i)[k];
  }
  if (m.value() == 0.0) return 0.0;
  Accumulator e;
  for (int i : atoms) {
    for (int k = 0; k < n; ++k) {
      double d = mu.coord(i)[k] - first[k].value() / m.value();
      e += mu[i].mass * d * d;
    }
  }
  return e.value();
}

double coordinate_energy(const AtomicMeasure& mu, const Cube& j) { return coordinate_energy(mu, mu.indices_in(j)); }

}  // namespace weightlab

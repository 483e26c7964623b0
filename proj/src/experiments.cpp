#include "weightlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "weightlab/util.hpp"

namespace weightlab {

namespace {

using Values = std::vector<std::vector<double>>;

Values grid_values(const std::function<std::vector<double>(const Grid&)>& stat, int dim, int bottom, int top,
                   const SampleMode& mode, int threads) {
  validate_grid_levels(dim, bottom, top);
  std::uint64_t count = 0;
  if (mode.exhaustive) {
    count = grid_count(dim, bottom, top);
    if (count == 0 || count > mode.cap) throw ValidationError("grid count exceeds the exhaustive cap");
  } else {
    if (mode.samples == 0) throw ValidationError("sample count must be positive");
    count = mode.samples;
  }
  Values out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Grid g = mode.exhaustive ? grid_from_index(dim, bottom, top, i)
                             : sample_grid(dim, bottom, top, derive_seed(mode.seed, i));
    out[i] = stat(g);
  });
  return out;
}

std::vector<Estimate> reduce(const Values& v, std::size_t width, bool exhaustive) {
  std::vector<Estimate> out(width);
  std::uint64_t n = v.size();
  for (std::size_t k = 0; k < width; ++k) {
    Accumulator s, s2;
    for (const auto& row : v) {
      if (row.size() != width) throw std::logic_error("statistic returned the wrong width");
      s += row[k];
      s2 += row[k] * row[k];
    }
    Estimate& e = out[k];
    e.count = n;
    e.exhaustive = exhaustive;
    e.mean = s.value() / static_cast<double>(n);
    if (!exhaustive && n > 1) {
      double var = (s2.value() - static_cast<double>(n) * e.mean * e.mean) / static_cast<double>(n - 1);
      e.stderr_ = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
  }
  return out;
}

int max_of(const std::vector<int>& v) {
  if (v.empty()) throw ValidationError("sweep needs at least one value");
  return *std::max_element(v.begin(), v.end());
}

void check_r_values(const std::vector<int>& rs) {
  if (rs.empty()) throw ValidationError("sweep needs at least one r value");
  for (int r : rs) {
    if (r < 1) throw ValidationError("r must be at least 1");
  }
}

void check_lambdas(const std::vector<double>& ls) {
  if (ls.empty()) throw ValidationError("sweep needs at least one lambda");
  for (double l : ls) {
    if (!(l > 0.0 && l < 0.5)) throw ValidationError("lambda must lie in (0, 1/2)");
  }
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Estimate> mc_expect_many(const std::function<std::vector<double>(const Grid&)>& stat, std::size_t width,
                                     int dim, int bottom, int top, const SampleMode& mode, int threads) {
  return reduce(grid_values(stat, dim, bottom, top, mode, threads), width, mode.exhaustive);
}

Estimate mc_expect(const std::function<double(const Grid&)>& stat, int dim, int bottom, int top,
                   const SampleMode& mode, int threads) {
  auto wrap = [&](const Grid& g) { return std::vector<double>{stat(g)}; };
  return mc_expect_many(wrap, 1, dim, bottom, top, mode, threads)[0];
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void ExperimentResult::check(const std::string& cname, double value, const std::string& relation, double bound) {
  Check c;
  c.name = cname;
  c.value = value;
  c.bound = bound;
  c.relation = relation;
  if (relation == "<=") {
    c.passed = value <= bound;
  } else if (relation == ">=") {
    c.passed = value >= bound;
  } else if (relation == "vacuous") {
    c.passed = true;
  } else {
    throw std::logic_error("unknown relation");
  }
  checks.push_back(c);
}

double log_slope(const std::vector<SweepPoint>& pts, bool log_x) {
  std::vector<double> x, y;
  for (const SweepPoint& p : pts) {
    if (!(p.estimate > 0.0)) continue;
    x.push_back(log_x ? std::log2(p.x) : p.x);
    y.push_back(std::log2(p.estimate));
  }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_slope(x, y);
}

nlohmann::ordered_json result_to_json(const ExperimentResult& r) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["parameter"] = r.parameter;
  auto pts = nlohmann::ordered_json::array();
  for (const SweepPoint& p : r.points) {
    nlohmann::ordered_json e;
    e[r.parameter] = p.x;
    e["estimate"] = num(p.estimate);
    e["stderr"] = num(p.stderr_);
    e["ratio"] = num(p.ratio);
    e["samples"] = p.samples;
    pts.push_back(e);
  }
  j["points"] = pts;
  j["slope"] = num(r.slope);
  j["fitted_constant"] = num(r.fitted_constant);
  j["max_ratio"] = num(r.max_ratio);
  j["seeds"] = r.seeds;
  auto checks = nlohmann::ordered_json::array();
  for (const Check& c : r.checks) {
    checks.push_back(
        {{"name", c.name}, {"value", num(c.value)}, {"relation", c.relation}, {"bound", num(c.bound)}, {"passed", c.passed}});
  }
  j["checks"] = checks;
  j["passed"] = r.passed();
  j["details"] = r.details;
  return j;
}

std::string result_to_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "lambda_or_r,estimate,stderr,slope,ratio\n";
  for (const SweepPoint& p : r.points) {
    os << fmt(p.x) << ',' << fmt(p.estimate) << ',' << fmt(p.stderr_) << ',' << fmt(r.slope) << ','
       << fmt(p.ratio) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- goodness

ExperimentResult exp_cond_prob_bad(const CondProbConfig& c) {
  check_dim(c.dim);
  check_r_values(c.r_values);
  check_eps(c.eps);
  validate_grid_levels(c.dim, c.bottom, c.top);
  int first = std::min(c.top + max_of(c.r_values), c.bottom);

  std::size_t width = c.r_values.size();
  std::vector<Accumulator> mean(width), var(width);
  std::uint64_t total = 0;
  int levels = 0;
  for (int lev = first; lev <= c.bottom; ++lev) {
    Cube i;
    i.dim = c.dim;
    i.level = lev;
    auto stat = [&](const Grid& g) {
      if (!g.has(i)) throw std::logic_error("fixed cube missing from a grid");
      std::vector<double> out(width);
      for (std::size_t k = 0; k < width; ++k) {
        out[k] = is_good_cube(i, g, GoodnessParams::with_r(c.r_values[k], c.eps)) ? 0.0 : 1.0;
      }
      return out;
    };
    SampleMode mode = c.mode;
    mode.seed = derive_seed(c.mode.seed, static_cast<std::uint64_t>(lev - kCoarsestLevel));
    // cubes at the bottom level of the sub-window are always grid cubes, so
    // grids of that window are exactly the grids conditioned on I
    std::vector<Estimate> est = mc_expect_many(stat, width, c.dim, lev, c.top, mode, c.threads);
    for (std::size_t k = 0; k < width; ++k) {
      mean[k] += est[k].mean;
      var[k] += est[k].stderr_ * est[k].stderr_;
    }
    total += est[0].count;
    ++levels;
  }

  ExperimentResult r;
  r.name = "cond_prob";
  r.parameter = "r";
  r.seeds = {c.mode.seed};
  for (std::size_t k = 0; k < width; ++k) {
    SweepPoint p;
    p.x = c.r_values[k];
    p.estimate = mean[k].value() / levels;
    p.stderr_ = std::sqrt(var[k].value()) / levels;
    p.ratio = p.estimate / std::exp2(-c.eps * p.x);
    p.samples = total;
    r.points.push_back(p);
    r.fitted_constant = std::max(r.fitted_constant, p.ratio);
  }
  r.max_ratio = r.fitted_constant;
  r.slope = log_slope(r.points, false);
  r.check("slope", r.slope, "<=", c.slope_bound);
  r.details["levels"] = {first, c.bottom};
  r.details["exhaustive"] = c.mode.exhaustive;
  return r;
}

ExperimentResult exp_bad_grid_prob(const BadGridConfig& c) {
  check_r_values(c.r_values);
  check_eps(c.eps);
  validate_grid_levels(c.dim, c.bottom, c.top);
  if (c.q.dim != c.dim) throw ValidationError("cube dimension does not match");
  if (c.q.level < c.top || c.q.level > c.bottom) throw ValidationError("cube level outside the window");

  std::vector<int> rs = c.r_values;
  std::sort(rs.begin(), rs.end());
  std::size_t width = rs.size();
  auto stat = [&](const Grid& g) {
    std::vector<double> out(width + 1, 0.0);
    for (std::size_t k = 0; k < width; ++k) {
      out[k] = is_q_good_grid(c.q, g, GoodnessParams::with_r(rs[k], c.eps)) ? 0.0 : 1.0;
      if (k > 0 && out[k] > out[k - 1]) out[width] = 1.0;
    }
    return out;
  };
  std::vector<Estimate> est = mc_expect_many(stat, width + 1, c.dim, c.bottom, c.top, c.mode, c.threads);

  ExperimentResult r;
  r.name = "bad_grid";
  r.parameter = "r";
  r.seeds = {c.mode.seed};
  for (std::size_t k = 0; k < width; ++k) {
    SweepPoint p;
    p.x = rs[k];
    p.estimate = est[k].mean;
    p.stderr_ = est[k].stderr_;
    p.ratio = p.estimate / std::exp2(-c.eps * p.x);
    p.samples = est[k].count;
    r.points.push_back(p);
    r.fitted_constant = std::max(r.fitted_constant, p.ratio);
  }
  r.max_ratio = r.fitted_constant;
  r.slope = log_slope(r.points, false);
  r.check("slope", r.slope, "<=", c.slope_bound);
  r.check("nested_violations", est[width].mean, "<=", 0.0);
  r.details["cube"] = cube_to_json(c.q);
  r.details["exhaustive"] = c.mode.exhaustive;
  return r;
}

int support_level(const AtomicMeasure& mu) {
  if (mu.empty()) throw ValidationError("measure has no atoms");
  int lev = kTickBits;
  while (lev > kCoarsestLevel) {
    Grid g = standard_grid(mu.dim(), lev, lev);
    Cube first = g.cube_at(mu[0].point, lev);
    bool all = true;
    for (std::size_t i = 1; i < mu.size() && all; ++i) all = first.contains(mu[i].point);
    if (all) return lev;
    --lev;
  }
  throw ValidationError("atoms too spread out");
}

ExperimentResult exp_bad_projection(const BadProjectionConfig& c) {
  check_r_values(c.r_values);
  check_eps(c.eps);
  int dim = c.mu.dim();
  validate_grid_levels(dim, c.bottom, c.top);
  if (c.q.dim != dim) throw ValidationError("cube dimension does not match");
  if (c.f.size() != c.mu.size()) throw ValidationError("function length does not match the measure");
  int lev_l = support_level(c.mu);
  int rmax = max_of(c.r_values);
  if (-c.top < lev_l + rmax) {
    throw ValidationError("top level too fine: need -N >= level(L) + r = " + std::to_string(lev_l + rmax));
  }
  double fnorm = norm2(c.mu, c.f);
  if (!(fnorm > 0.0)) throw ValidationError("function must be nonzero");

  std::vector<int> rs = c.r_values;
  std::sort(rs.begin(), rs.end());
  std::size_t width = rs.size();
  auto stat = [&](const Grid& g) {
    HaarBasis basis = build_basis_all(g, c.mu);
    MuFunction f0 = c.f;
    // remove the top-level averages: only the martingale differences of f
    // are split into good and bad parts
    std::map<Cube, std::pair<double, double>> tops;
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
      auto& t = tops[g.cube_at(c.mu[i].point, g.top)];
      t.first += c.mu[i].mass * c.f[i];
      t.second += c.mu[i].mass;
    }
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
      const auto& t = tops[g.cube_at(c.mu[i].point, g.top)];
      f0[i] -= t.first / t.second;
    }
    std::vector<double> out(width + 1, 0.0);
    for (std::size_t k = 0; k < width; ++k) {
      GoodSplit s = good_projection(c.q, basis, c.f, GoodnessParams::with_r(rs[k], c.eps));
      MuFunction bad(f0.size());
      for (std::size_t i = 0; i < f0.size(); ++i) bad[i] = f0[i] - s.good[i];
      out[k] = norm2(c.mu, bad);
      out[width] = std::max(out[width], std::fabs(inner(c.mu, s.good, bad)) / (fnorm * fnorm));
    }
    return out;
  };
  Values v = grid_values(stat, dim, c.bottom, c.top, c.mode, c.threads);
  std::vector<Estimate> est = reduce(v, width + 1, c.mode.exhaustive);
  double residual = 0.0;
  for (const auto& row : v) residual = std::max(residual, row[width]);

  ExperimentResult r;
  r.name = "bad_projection";
  r.parameter = "r";
  r.seeds = {c.mode.seed};
  for (std::size_t k = 0; k < width; ++k) {
    SweepPoint p;
    p.x = rs[k];
    p.estimate = est[k].mean;
    p.stderr_ = est[k].stderr_;
    p.ratio = p.estimate / (fnorm * std::exp2(-c.eps * p.x / 2));
    p.samples = est[k].count;
    r.points.push_back(p);
    r.fitted_constant = std::max(r.fitted_constant, p.ratio);
  }
  r.max_ratio = r.fitted_constant;
  r.slope = log_slope(r.points, false);
  r.check("slope", r.slope, "<=", c.slope_bound);
  r.check("orthogonality_residual", residual, "<=", 1e-10);
  r.details["f_norm"] = fnorm;
  r.details["support_level"] = lev_l;
  r.details["cube"] = cube_to_json(c.q);
  r.details["exhaustive"] = c.mode.exhaustive;
  return r;
}

// ---------------------------------------------------------------- surgery

void SurgeryConfig::validate() const {
  int n = omega.dim();
  if (omega.empty()) throw ValidationError("measure has no atoms");
  if (r_cube.dim != n) throw ValidationError("cube dimension does not match");
  check_lambdas(lambdas);
  if (j_level < r_cube.level || j_level > r_cube.level + 9) {
    throw ValidationError("J must be at most as large as R and comparable in size");
  }
  if (bottom <= j_level || bottom > kTickBits) throw ValidationError("shift level must be finer than J");
  if (!(omega.mass(r_cube) > 0.0)) throw ValidationError("R carries no mass");
  if (samples == 0) throw ValidationError("sample count must be positive");
}

namespace {

struct CubeAgg {
  double m = 0.0, mr = 0.0;
  std::vector<double> mc, mrc, collar;  // per child; collar per lambda and child
};

// Values for one shift: hand[L], follow[L], exceed[L], follow_child[L * C].
std::vector<double> shift_values(const SurgeryConfig& c, const std::array<Tick, kMaxDim>& shift) {
  int n = c.omega.dim();
  std::size_t nl = c.lambdas.size();
  std::size_t nc = std::size_t{1} << n;
  Tick s = side_ticks(c.j_level);
  double sd = to_double(s);
  std::vector<double> widths(nl);
  for (std::size_t l = 0; l < nl; ++l) widths[l] = c.lambdas[l] * sd;

  std::vector<double> out(3 * nl + nl * nc, 0.0);
  std::map<std::array<Tick, kMaxDim>, CubeAgg> cubes;
  for (std::size_t i = 0; i < c.omega.size(); ++i) {
    const Atom& a = c.omega[i];
    std::array<Tick, kMaxDim> lower{};
    std::size_t child = 0;
    std::array<double, kMaxDim> off{};
    for (int k = 0; k < n; ++k) {
      lower[k] = floor_div(a.point.x[k] - shift[k], s) * s + shift[k];
      Tick t = a.point.x[k] - lower[k];
      child = child * 2 + (t >= s / 2 ? 1 : 0);
      off[k] = to_double(t);
    }
    bool in_r = c.r_cube.contains(a.point);
    CubeAgg& agg = cubes[lower];
    if (agg.mc.empty()) {
      agg.mc.assign(nc, 0.0);
      agg.mrc.assign(nc, 0.0);
      agg.collar.assign(nl * nc, 0.0);
    }
    agg.m += a.mass;
    agg.mc[child] += a.mass;
    if (in_r) {
      agg.mr += a.mass;
      agg.mrc[child] += a.mass;
    }
    for (std::size_t l = 0; l < nl; ++l) {
      bool inner_part = true;
      for (int k = 0; k < n; ++k) inner_part = inner_part && off[k] > widths[l] && off[k] < sd - widths[l];
      if (inner_part) continue;
      agg.collar[l * nc + child] += a.mass;
      if (in_r) out[l] += a.mass;
    }
  }
  for (const auto& [lower, agg] : cubes) {
    double whole = agg.mr / agg.m;
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t ch = 0; ch < nc; ++ch) {
        if (agg.mc[ch] == 0.0) continue;
        double d = agg.mrc[ch] / agg.mc[ch] - whole;
        double v = agg.collar[l * nc + ch] * d * d;
        out[nl + l] += v;
        out[3 * nl + l * nc + ch] += v;
      }
      // collar share of the lowest child times its share inside R
      if (agg.mc[0] > 0.0) {
        double q = agg.collar[l * nc] / agg.mc[0] * agg.mrc[0] / agg.mc[0];
        if (q > std::sqrt(c.lambdas[l])) out[2 * nl + l] = 1.0;
      }
    }
  }
  return out;
}

}  // namespace

ShiftStats surgery_averages(const SurgeryConfig& c, int step_level, const std::vector<Tick>& phase) {
  c.validate();
  int n = c.omega.dim();
  if (step_level <= c.j_level || step_level > kTickBits) throw ValidationError("shift level must be finer than J");
  if (static_cast<int>(phase.size()) != n) throw ValidationError("phase needs one entry per axis");
  std::uint64_t per = std::uint64_t{1} << (step_level - c.j_level);
  std::uint64_t total = 1;
  bool exhaustive = true;
  for (int k = 0; k < n; ++k) {
    if (total > c.shift_cap / per) {
      exhaustive = false;
      break;
    }
    total *= per;
  }
  if (!exhaustive) total = c.samples;
  Tick step = side_ticks(step_level);

  std::vector<std::vector<double>> rows(total);
  parallel_for(total, c.threads, [&](std::size_t idx) {
    std::array<Tick, kMaxDim> shift{};
    if (exhaustive) {
      std::uint64_t rest = idx;
      for (int k = n - 1; k >= 0; --k) {
        shift[k] = phase[k] + static_cast<Tick>(rest % per) * step;
        rest /= per;
      }
    } else {
      Rng rng(derive_seed(c.seed, idx));
      for (int k = 0; k < n; ++k) shift[k] = phase[k] + static_cast<Tick>(uniform_index(rng, per)) * step;
    }
    rows[idx] = shift_values(c, shift);
  });

  std::size_t nl = c.lambdas.size();
  std::size_t nc = std::size_t{1} << n;
  std::vector<double> sums(rows.empty() ? 0 : rows[0].size());
  for (std::size_t k = 0; k < sums.size(); ++k) {
    Accumulator acc;
    for (const auto& row : rows) acc += row[k];
    sums[k] = acc.value() / static_cast<double>(total);
  }
  ShiftStats st;
  st.shifts = total;
  st.exhaustive = exhaustive;
  st.hand.assign(sums.begin(), sums.begin() + static_cast<std::ptrdiff_t>(nl));
  st.follow.assign(sums.begin() + static_cast<std::ptrdiff_t>(nl), sums.begin() + static_cast<std::ptrdiff_t>(2 * nl));
  st.exceed.assign(sums.begin() + static_cast<std::ptrdiff_t>(2 * nl),
                   sums.begin() + static_cast<std::ptrdiff_t>(3 * nl));
  for (std::size_t l = 0; l < nl; ++l) {
    auto b = sums.begin() + static_cast<std::ptrdiff_t>(3 * nl + l * nc);
    st.follow_child.emplace_back(b, b + static_cast<std::ptrdiff_t>(nc));
  }
  return st;
}

namespace {

nlohmann::ordered_json surgery_details(const SurgeryConfig& c, const ShiftStats& st, double rmass) {
  nlohmann::ordered_json d;
  d["R"] = cube_to_json(c.r_cube);
  d["R_mass"] = rmass;
  d["J_level"] = c.j_level;
  d["shift_level"] = c.bottom;
  d["shifts"] = st.shifts;
  d["exhaustive"] = st.exhaustive;
  return d;
}

}  // namespace

ExperimentResult exp_surgery_hand(const SurgeryConfig& c) {
  ShiftStats st = surgery_averages(c, c.bottom, std::vector<Tick>(static_cast<std::size_t>(c.omega.dim()), 0));
  double rmass = c.omega.mass(c.r_cube);
  int n = c.omega.dim();
  ExperimentResult r;
  r.name = "surgery_hand";
  r.parameter = "lambda";
  r.seeds = {c.seed};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t l = 0; l < c.lambdas.size(); ++l) {
    SweepPoint p;
    p.x = c.lambdas[l];
    p.estimate = st.hand[l];
    p.ratio = p.estimate / (p.x * rmass);
    p.samples = st.shifts;
    r.points.push_back(p);
    lo = std::min(lo, p.ratio);
    hi = std::max(hi, p.ratio);
  }
  r.fitted_constant = hi;
  r.max_ratio = hi;
  r.slope = log_slope(r.points, true);
  r.check("min_ratio", lo, ">=", 0.5);
  r.check("max_ratio", hi, "<=", 4.0 * n);
  r.check("slope", r.slope, ">=", c.slope_bound);
  r.details = surgery_details(c, st, rmass);
  return r;
}

ExperimentResult exp_follow_est(const SurgeryConfig& c) {
  ShiftStats st = surgery_averages(c, c.bottom, std::vector<Tick>(static_cast<std::size_t>(c.omega.dim()), 0));
  double rmass = c.omega.mass(c.r_cube);
  ExperimentResult r;
  r.name = "follow_est";
  r.parameter = "lambda";
  r.seeds = {c.seed};
  auto children_json = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < c.lambdas.size(); ++l) {
    SweepPoint p;
    p.x = c.lambdas[l];
    p.estimate = st.follow[l];
    p.ratio = p.estimate / (std::sqrt(p.x) * rmass);
    p.samples = st.shifts;
    r.points.push_back(p);
    r.fitted_constant = std::max(r.fitted_constant, p.ratio);
    children_json.push_back(st.follow_child[l]);
  }
  r.max_ratio = r.fitted_constant;
  r.slope = log_slope(r.points, true);
  if (std::isnan(r.slope)) {
    // no positive estimates: the bound holds trivially
    r.check("slope", 0.0, "vacuous", c.slope_bound);
  } else {
    r.check("slope", r.slope, ">=", c.slope_bound);
  }
  r.details = surgery_details(c, st, rmass);
  r.details["per_child"] = children_json;
  r.details["threshold_exceed_fraction"] = st.exceed;
  return r;
}

// ---------------------------------------------------------------- good lambda

std::vector<MeasurePair> make_corpus(const CorpusSpec& s) {
  if (s.pairs < 1) throw ValidationError("corpus needs at least one pair");
  if (s.max_atoms < 1) throw ValidationError("corpus needs at least one atom per measure");
  std::vector<MeasurePair> out;
  for (int i = 0; i < s.pairs; ++i) {
    Rng rng(derive_seed(s.seed, static_cast<std::uint64_t>(i)));
    MeasurePair pair;
    for (int side = 0; side < 2; ++side) {
      GeneratorParams g;
      g.kind = "random_uniform";
      g.dim = s.dim;
      g.level = s.level;
      g.count = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.max_atoms)));
      g.seed = rng();
      (side == 0 ? pair.first : pair.second) = generate(g);
    }
    out.push_back(std::move(pair));
  }
  return out;
}

namespace {

struct PairRatios {
  std::vector<double> ratio;  // per lambda
  double strong = 0.0;
  std::size_t best_lambda = 0;
};

PairRatios pair_ratios(const MeasurePair& p, const nlohmann::json& constants, int grids,
                       const std::vector<double>& lambdas) {
  ConstantsConfig cfg = constants_config_from_json(constants, p.first, p.second);
  cfg.family.grids = grids;
  cfg.lambdas = lambdas;
  cfg.threads = 1;
  ConstantsReport rep = ConstantsEngine(p.first, p.second, cfg).full_report();
  PairRatios out;
  double best_rhs = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < rep.rhs.size(); ++l) {
    out.ratio.push_back(rep.rhs[l].ratio);
    if (rep.rhs[l].rhs < best_rhs) {
      best_rhs = rep.rhs[l].rhs;
      out.best_lambda = l;
    }
  }
  double denom = std::sqrt(rep.frak_a2) + rep.testing.value + rep.testing_star.value;
  out.strong = denom > 0.0 ? rep.wbp.value / denom : 0.0;
  return out;
}

struct CorpusRun {
  std::vector<PairRatios> small, big;
};

CorpusRun run_corpus(const GoodLambdaConfig& c) {
  if (c.corpus.empty()) throw ValidationError("corpus is empty");
  check_lambdas(c.lambdas);
  if (c.growth < 2) throw ValidationError("family growth must be at least 2");
  ConstantsConfig probe = constants_config_from_json(c.constants, c.corpus[0].first, c.corpus[0].second);
  int grids = probe.family.grids;
  CorpusRun run;
  run.small.resize(c.corpus.size());
  run.big.resize(c.corpus.size());
  parallel_for(2 * c.corpus.size(), c.threads, [&](std::size_t k) {
    std::size_t i = k / 2;
    if (k % 2 == 0) {
      run.small[i] = pair_ratios(c.corpus[i], c.constants, grids, c.lambdas);
    } else {
      run.big[i] = pair_ratios(c.corpus[i], c.constants, grids * c.growth, c.lambdas);
    }
  });
  return run;
}

double drift(double a, double b) { return a > 0.0 ? std::fabs(b - a) / a : std::fabs(b - a); }

}  // namespace

ExperimentResult exp_good_lambda(const GoodLambdaConfig& c) {
  CorpusRun run = run_corpus(c);
  ExperimentResult r;
  r.name = "good_lambda";
  r.parameter = "lambda";
  double max_small = 0.0, max_big = 0.0, strong_small = 0.0, strong_big = 0.0;
  for (std::size_t l = 0; l < c.lambdas.size(); ++l) {
    SweepPoint p;
    p.x = c.lambdas[l];
    p.samples = c.corpus.size();
    for (std::size_t i = 0; i < c.corpus.size(); ++i) {
      p.estimate = std::max(p.estimate, run.small[i].ratio[l]);
      max_big = std::max(max_big, run.big[i].ratio[l]);
    }
    p.ratio = p.estimate;
    max_small = std::max(max_small, p.estimate);
    r.points.push_back(p);
  }
  auto best = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.corpus.size(); ++i) {
    strong_small = std::max(strong_small, run.small[i].strong);
    strong_big = std::max(strong_big, run.big[i].strong);
    best.push_back({{"lambda", c.lambdas[run.small[i].best_lambda]},
                    {"ratio", run.small[i].ratio[run.small[i].best_lambda]}});
  }
  r.max_ratio = max_small;
  r.fitted_constant = max_small;
  r.check("max_ratio_finite", std::isfinite(max_small) ? 0.0 : 1.0, "<=", 0.0);
  r.check("family_drift", drift(max_small, max_big), "<=", c.drift_bound);
  r.check("strong_family_drift", drift(strong_small, strong_big), "<=", c.drift_bound);
  if (c.baseline.is_object()) {
    if (c.baseline.contains("good_lambda_max_ratio")) {
      r.check("baseline", drift(c.baseline["good_lambda_max_ratio"].get<double>(), max_small), "<=",
              c.baseline_slack);
    }
    if (c.baseline.contains("strong_max_ratio")) {
      r.check("strong_baseline", drift(c.baseline["strong_max_ratio"].get<double>(), strong_small), "<=",
              c.baseline_slack);
    }
  }
  r.details["pairs"] = c.corpus.size();
  r.details["max_ratio_enlarged"] = max_big;
  r.details["strong_max_ratio"] = strong_small;
  r.details["strong_max_ratio_enlarged"] = strong_big;
  r.details["best_lambda"] = best;
  return r;
}

ExperimentResult exp_one_dim_strong(const GoodLambdaConfig& c) {
  if (c.corpus.empty()) throw ValidationError("corpus is empty");
  for (const auto& p : c.corpus) {
    if (p.first.dim() != 1) throw ValidationError("the strong inequality is one-dimensional");
  }
  CorpusRun run = run_corpus(c);
  ExperimentResult r;
  r.name = "one_dim_strong";
  r.parameter = "lambda";
  double small = 0.0, big = 0.0;
  auto per = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.corpus.size(); ++i) {
    small = std::max(small, run.small[i].strong);
    big = std::max(big, run.big[i].strong);
    per.push_back(run.small[i].strong);
  }
  r.max_ratio = small;
  r.fitted_constant = small;
  r.check("max_ratio_finite", std::isfinite(small) ? 0.0 : 1.0, "<=", 0.0);
  r.check("family_drift", drift(small, big), "<=", c.drift_bound);
  if (c.baseline.is_object() && c.baseline.contains("strong_max_ratio")) {
    r.check("baseline", drift(c.baseline["strong_max_ratio"].get<double>(), small), "<=", c.baseline_slack);
  }
  r.details["per_pair"] = per;
  r.details["max_ratio_enlarged"] = big;
  return r;
}

// ---------------------------------------------------------------- appendix

std::vector<AppendixInstance> make_appendix_corpus(int count, int atoms, std::uint64_t seed) {
  if (count < 1 || atoms < 2) throw ValidationError("appendix corpus needs instances with at least two atoms");
  std::vector<AppendixInstance> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    AppendixInstance inst;
    for (int side = 0; side < 2; ++side) {
      GeneratorParams g;
      g.kind = "random_uniform";
      g.level = 6;
      g.count = atoms;
      g.seed = rng();
      AtomicMeasure mu = generate(g);
      std::vector<double> f(mu.size());
      double mean = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = 2 * uniform01(rng) - 1;
        mean += f[k] * mu[k].mass;
      }
      mean /= mu.total_mass();
      for (double& v : f) v -= mean;
      if (side == 0) {
        inst.sigma = std::move(mu);
        inst.f = std::move(f);
      } else {
        inst.omega = std::move(mu);
        inst.g = std::move(f);
      }
    }
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

void check_mean_zero(const AtomicMeasure& mu, const std::vector<double>& f) {
  if (f.size() != mu.size()) throw ValidationError("function length does not match the measure");
  double s = 0.0, a = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    s += f[i] * mu[i].mass;
    a += std::fabs(f[i]) * mu[i].mass;
  }
  if (std::fabs(s) > 1e-10 * std::max(a, 1e-300)) throw ValidationError("function must have mean zero");
}

struct AppendixStats {
  double diff = 0.0, s = 0.0;     // grid averages of |B - C| and S
  bool bounded = true;            // |C| <= S on every grid
  std::vector<double> part1, part2;  // per lambda, normalised by the right-hand sides
};

AppendixStats appendix_instance(const AppendixInstance& inst, const nlohmann::json& constants, int grids,
                                const std::vector<double>& lambdas) {
  ConstantsConfig cfg = constants_config_from_json(constants, inst.sigma, inst.omega);
  if (cfg.kernel.components() != 1) throw ValidationError("appendix forms need a scalar kernel");
  cfg.family.grids = grids;
  cfg.threads = 1;
  ConstantsEngine eng(inst.sigma, inst.omega, cfg);
  ConstantsReport rep = eng.full_report();
  Accumulator diff, s;
  AppendixStats st;
  for (const Grid& g : eng.family().grids) {
    HaarBasis bs = build_basis_all(g, inst.sigma);
    HaarBasis bw = build_basis_all(g, inst.omega);
    Forms fm = forms_bcs(cfg.kernel, bs, bw, inst.f, inst.g, cfg.goodness);
    diff += std::fabs(fm.B - fm.C);
    s += fm.S;
    if (std::fabs(fm.C) > fm.S * (1 + 1e-12) + 1e-300) st.bounded = false;
  }
  double count = static_cast<double>(eng.family().grids.size());
  st.diff = diff.value() / count;
  st.s = s.value() / count;
  double fg = norm2(inst.sigma, inst.f) * norm2(inst.omega, inst.g);
  double bad_norm = std::exp2(-cfg.goodness.eps * cfg.goodness.r) * rep.norm.value;
  for (double l : lambdas) {
    double rhs2 = std::sqrt(rep.frak_a2) / l + rep.testing.value + rep.testing_star.value +
                  std::pow(l, 0.25) * rep.norm.value;
    double rhs1 = rhs2 + rep.energy.value + rep.energy_star.value + bad_norm;
    st.part1.push_back(st.diff / (rhs1 * fg));
    st.part2.push_back(st.s / (rhs2 * fg));
  }
  return st;
}

}  // namespace

ExperimentResult exp_appendix_parts(const AppendixConfig& c) {
  if (c.corpus.empty()) throw ValidationError("corpus is empty");
  if (c.grids < 1) throw ValidationError("need at least one grid");
  check_lambdas(c.lambdas);
  for (const auto& inst : c.corpus) {
    check_mean_zero(inst.sigma, inst.f);
    check_mean_zero(inst.omega, inst.g);
  }
  std::size_t m = c.corpus.size();
  std::vector<AppendixStats> base(m), twice(m);
  parallel_for(2 * m, c.threads, [&](std::size_t k) {
    std::size_t i = k / 2;
    if (k % 2 == 0) {
      base[i] = appendix_instance(c.corpus[i], c.constants, c.grids, c.lambdas);
    } else {
      twice[i] = appendix_instance(c.corpus[i], c.constants, 2 * c.grids, c.lambdas);
    }
  });

  // fitted constant of a part: best lambda of the worst instance
  auto fitted = [&](const std::vector<AppendixStats>& v, bool first) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < c.lambdas.size(); ++l) {
      double worst = 0.0;
      for (const auto& st : v) worst = std::max(worst, first ? st.part1[l] : st.part2[l]);
      best = std::min(best, worst);
    }
    return best;
  };
  ExperimentResult r;
  r.name = "appendix";
  r.parameter = "lambda";
  for (std::size_t l = 0; l < c.lambdas.size(); ++l) {
    SweepPoint p;
    p.x = c.lambdas[l];
    p.samples = static_cast<std::uint64_t>(c.grids);
    for (const auto& st : base) {
      p.estimate = std::max(p.estimate, st.part2[l]);
      p.ratio = std::max(p.ratio, st.part1[l]);
    }
    r.points.push_back(p);
  }
  double c1 = fitted(base, true), c2 = fitted(base, false);
  double c1b = fitted(twice, true), c2b = fitted(twice, false);
  r.fitted_constant = c2;
  r.max_ratio = c1;
  bool bounded = std::all_of(base.begin(), base.end(), [](const AppendixStats& s) { return s.bounded; }) &&
                 std::all_of(twice.begin(), twice.end(), [](const AppendixStats& s) { return s.bounded; });
  r.check("close_pairs_bounded", bounded ? 0.0 : 1.0, "<=", 0.0);
  r.check("part1_constant_drift", drift(c1, c1b), "<=", 0.10);
  r.check("part2_constant_drift", drift(c2, c2b), "<=", 0.10);
  auto per = nlohmann::ordered_json::array();
  for (const auto& st : base) per.push_back({{"E_abs_B_minus_C", st.diff}, {"E_S", st.s}});
  r.details["instances"] = per;
  r.details["part1_constant"] = c1;
  r.details["part2_constant"] = c2;
  r.details["part1_constant_doubled"] = c1b;
  r.details["part2_constant_doubled"] = c2b;
  r.details["grids"] = c.grids;
  r.details["close_pairs"] = "eta-close with eta = r";
  return r;
}

// ---------------------------------------------------------------- dispatch

namespace {

AtomicMeasure measure_input(const nlohmann::json& j) {
  if (j.is_object() && j.contains("atoms")) return measure_from_json(j);
  return generate(generator_from_json(j));
}

SampleMode mode_input(const nlohmann::json& j, bool exhaustive_default, std::uint64_t samples_default) {
  SampleMode m;
  std::string mode = j.value("mode", std::string(exhaustive_default ? "exhaustive" : "sample"));
  if (mode != "exhaustive" && mode != "sample") throw ValidationError("mode must be 'exhaustive' or 'sample'");
  m.exhaustive = mode == "exhaustive";
  m.samples = j.value("samples", samples_default);
  m.seed = j.value("seed", std::uint64_t{1});
  m.cap = j.value("cap", m.cap);
  return m;
}

Cube default_cube(int dim, int level, Tick lower) {
  Cube q;
  q.dim = dim;
  q.level = level;
  for (int k = 0; k < dim; ++k) q.lower[k] = lower;
  return q;
}

GoodLambdaConfig good_lambda_input(const nlohmann::json& j) {
  GoodLambdaConfig c;
  const nlohmann::json corpus = j.value("corpus", nlohmann::json::object());
  if (corpus.is_array()) {
    for (const auto& p : corpus) c.corpus.emplace_back(measure_input(p.at("sigma")), measure_input(p.at("omega")));
  } else {
    CorpusSpec s;
    s.pairs = corpus.value("pairs", s.pairs);
    s.dim = corpus.value("dim", s.dim);
    s.max_atoms = corpus.value("max_atoms", s.max_atoms);
    s.level = corpus.value("level", s.level);
    s.seed = corpus.value("seed", s.seed);
    c.corpus = make_corpus(s);
  }
  c.constants = j.value("constants", nlohmann::json::object());
  if (!c.constants.contains("grids")) c.constants["grids"] = 8;
  if (j.contains("lambda")) c.lambdas = j["lambda"].get<std::vector<double>>();
  c.growth = j.value("growth", c.growth);
  c.drift_bound = j.value("drift_bound", c.drift_bound);
  c.baseline_slack = j.value("baseline_slack", c.baseline_slack);
  if (j.contains("baseline")) c.baseline = j["baseline"];
  return c;
}

SurgeryConfig surgery_input(const nlohmann::json& j, bool follow) {
  SurgeryConfig c;
  GeneratorParams lattice;
  lattice.kind = "lattice";
  lattice.level = 10;
  lattice.dim = j.value("dim", 1);
  c.omega = j.contains("omega") ? measure_input(j["omega"]) : generate(lattice);
  int n = c.omega.dim();
  c.r_cube = j.contains("R") ? cube_from_json(j["R"]) : default_cube(n, 2, Tick{1} << 28);
  if (c.r_cube.dim != n) throw ValidationError("cube dimension does not match");
  c.j_level = j.value("J_level", c.r_cube.level + 1);
  c.bottom = j.value("M", 12);
  if (j.contains("lambda")) {
    c.lambdas = j["lambda"].get<std::vector<double>>();
  } else {
    for (int k = 2; k <= (follow ? 8 : 6); ++k) c.lambdas.push_back(std::ldexp(1.0, -k));
  }
  c.slope_bound = j.value("slope_bound", follow ? 0.45 : 0.9);
  c.shift_cap = j.value("shift_cap", c.shift_cap);
  c.samples = j.value("samples", c.samples);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::vector<int> r_input(const nlohmann::json& j) {
  if (j.contains("r")) return j["r"].get<std::vector<int>>();
  return {2, 3, 4, 5, 6};
}

ExperimentResult dispatch(const std::string& name, const nlohmann::json& j, int threads) {
  if (name == "cond_prob") {
    CondProbConfig c;
    c.dim = j.value("dim", 1);
    c.bottom = j.value("M", 10);
    c.top = j.value("N", 0);
    c.r_values = r_input(j);
    c.eps = j.value("eps", 0.45);
    c.mode = mode_input(j, true, 10000);
    c.slope_bound = j.value("slope_bound", -c.eps * 0.85);
    c.threads = threads;
    return exp_cond_prob_bad(c);
  }
  if (name == "bad_grid") {
    BadGridConfig c;
    c.dim = j.value("dim", 1);
    c.bottom = j.value("M", 14);
    c.top = j.value("N", 0);
    c.q = j.contains("Q") ? cube_from_json(j["Q"]) : default_cube(c.dim, 10, 75 * (Tick{1} << 16));
    c.r_values = r_input(j);
    c.eps = j.value("eps", 0.45);
    c.mode = mode_input(j, false, 10000);
    c.slope_bound = j.value("slope_bound", -c.eps * 0.85);
    c.threads = threads;
    return exp_bad_grid_prob(c);
  }
  if (name == "bad_projection") {
    BadProjectionConfig c;
    GeneratorParams g;
    g.kind = "random_uniform";
    g.dim = j.value("dim", 1);
    g.level = 7;
    g.count = 32;
    c.mu = j.contains("measure") ? measure_input(j["measure"]) : generate(g);
    int n = c.mu.dim();
    if (j.contains("f")) {
      c.f = j["f"].get<std::vector<double>>();
    } else {
      Rng rng(j.value("f_seed", std::uint64_t{7}));
      for (std::size_t i = 0; i < c.mu.size(); ++i) c.f.push_back(2 * uniform01(rng) - 1);
    }
    c.q = j.contains("Q") ? cube_from_json(j["Q"]) : default_cube(n, 3, 5 * (Tick{1} << 24));
    c.r_values = r_input(j);
    c.bottom = j.value("M", 9);
    c.top = j.value("N", -(support_level(c.mu) + max_of(c.r_values)));
    c.eps = j.value("eps", 0.45);
    c.mode = mode_input(j, false, 10000);
    c.slope_bound = j.value("slope_bound", -c.eps / 2 * 0.85);
    c.threads = threads;
    return exp_bad_projection(c);
  }
  if (name == "surgery_hand" || name == "follow_est") {
    bool follow = name == "follow_est";
    SurgeryConfig c = surgery_input(j, follow);
    c.threads = threads;
    return follow ? exp_follow_est(c) : exp_surgery_hand(c);
  }
  if (name == "good_lambda" || name == "one_dim_strong") {
    GoodLambdaConfig c = good_lambda_input(j);
    c.threads = threads;
    return name == "good_lambda" ? exp_good_lambda(c) : exp_one_dim_strong(c);
  }
  if (name == "appendix") {
    AppendixConfig c;
    const nlohmann::json corpus = j.value("corpus", nlohmann::json::object());
    if (corpus.is_array()) {
      for (const auto& e : corpus) {
        AppendixInstance inst;
        inst.sigma = measure_input(e.at("sigma"));
        inst.omega = measure_input(e.at("omega"));
        inst.f = e.at("f").get<std::vector<double>>();
        inst.g = e.at("g").get<std::vector<double>>();
        c.corpus.push_back(std::move(inst));
      }
    } else {
      c.corpus = make_appendix_corpus(corpus.value("count", 4), corpus.value("atoms", 8),
                                      corpus.value("seed", std::uint64_t{1}));
    }
    c.constants = j.value("constants", nlohmann::json::object());
    if (!c.constants.contains("M")) c.constants["M"] = 8;
    c.grids = j.value("grids", c.grids);
    if (j.contains("lambda")) c.lambdas = j["lambda"].get<std::vector<double>>();
    c.threads = threads;
    return exp_appendix_parts(c);
  }
  throw ValidationError("unknown experiment '" + name + "'");
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"cond_prob", "bad_grid", "bad_projection", "surgery_hand", "follow_est", "good_lambda", "one_dim_strong",
          "appendix"};
}

ExperimentResult run_experiment(const std::string& name, const nlohmann::json& config, int threads) {
  if (!config.is_object()) throw ValidationError("experiment config must be an object");
  try {
    ExperimentResult r = dispatch(name, config, resolve_threads(threads));
    r.details["config"] = nlohmann::ordered_json::parse(config.dump());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad experiment config: ") + e.what());
  }
}

}  // namespace weightlab

#include <cmath>

#include "doctest.h"
#include "weightlab/experiments.hpp"
#include "weightlab/util.hpp"

using namespace weightlab;

namespace {

Tick t(double v) { return snap(v, kTickBits); }

AtomicMeasure single(double x, double m = 1.0) { return AtomicMeasure(1, {{Point{1, {t(x)}}, m}}); }

AtomicMeasure lattice(int dim, int level) {
  GeneratorParams g;
  g.kind = "lattice";
  g.dim = dim;
  g.level = level;
  return generate(g);
}

SurgeryConfig surgery(AtomicMeasure w, std::vector<double> lambdas) {
  SurgeryConfig c;
  c.omega = std::move(w);
  int n = c.omega.dim();
  c.r_cube.dim = n;
  for (int k = 0; k < n; ++k) c.r_cube.lower[k] = t(0.25);
  c.lambdas = std::move(lambdas);
  return c;
}

std::vector<double> powers(int from, int to) {
  std::vector<double> out;
  for (int k = from; k <= to; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

}  // namespace

TEST_CASE("grid averages") {
  SampleMode all;
  Estimate c = mc_expect([](const Grid&) { return 3.5; }, 1, 6, 0, all);
  CHECK(c.mean == 3.5);
  CHECK(c.count == 64);

  Grid chosen = grid_from_index(1, 2, 0, 2);
  Estimate one = mc_expect([&](const Grid& g) { return g == chosen ? 1.0 : 0.0; }, 1, 2, 0, all);
  CHECK(one.mean == 0.25);

  auto stat = [](const Grid& g) { return static_cast<double>(g.offset[0] % 7); };
  Estimate exact = mc_expect(stat, 1, 8, 0, all);
  SampleMode some{false, 4000, 3};
  Estimate sampled = mc_expect(stat, 1, 8, 0, some);
  CHECK(sampled.stderr_ > 0.0);
  CHECK(std::fabs(sampled.mean - exact.mean) <= 3 * sampled.stderr_);

  SampleMode capped;
  capped.cap = 100;
  CHECK_THROWS_AS(mc_expect(stat, 1, 8, 0, capped), ValidationError);
}

TEST_CASE("conditional bad probability") {
  CondProbConfig c;
  ExperimentResult r = exp_cond_prob_bad(c);
  // exhaustive enumeration of the offsets of I's ancestors
  const double oracle[] = {1.0, 0.740234375, 0.525, 0.343359375, 0.218359375};
  REQUIRE(r.points.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(r.points[k].estimate == doctest::Approx(oracle[k]).epsilon(1e-15));
  CHECK(r.slope <= -0.45 * 0.85);
  CHECK(r.passed());

  c.r_values = {11};
  CHECK(exp_cond_prob_bad(c).points[0].estimate == 0.0);

  c.r_values = {2, 3, 4, 5, 6};
  c.mode = SampleMode{false, 2000, 5};
  ExperimentResult a = exp_cond_prob_bad(c);
  c.mode.samples = 4000;
  ExperimentResult b = exp_cond_prob_bad(c);
  double shrink = a.points[2].stderr_ / b.points[2].stderr_;
  CHECK(shrink > 1.2);
  CHECK(shrink < 1.7);
  for (int k = 0; k < 5; ++k) CHECK(std::fabs(b.points[k].estimate - oracle[k]) <= 4 * b.points[k].stderr_ + 1e-12);
}

TEST_CASE("bad grid probability") {
  BadGridConfig c;
  c.bottom = 10;
  c.q = make_cube(1, 7, {t(37.0 / 1024)});
  c.mode = SampleMode{};
  ExperimentResult exact = exp_bad_grid_prob(c);
  for (std::size_t k = 1; k < exact.points.size(); ++k) {
    CHECK(exact.points[k].estimate <= exact.points[k - 1].estimate);
  }
  c.mode = SampleMode{false, 3000, 9};
  ExperimentResult mc = exp_bad_grid_prob(c);
  for (std::size_t k = 0; k < mc.points.size(); ++k) {
    CHECK(std::fabs(mc.points[k].estimate - exact.points[k].estimate) <= 4 * mc.points[k].stderr_ + 1e-12);
  }
  CHECK(mc.checks[1].passed);

  c.q = make_cube(1, 0, {0});
  ExperimentResult top = exp_bad_grid_prob(c);
  for (const auto& p : top.points) CHECK(p.estimate == 0.0);

  c.q = make_cube(1, 11, {0});
  CHECK_THROWS_AS(exp_bad_grid_prob(c), ValidationError);
}

TEST_CASE("bad projection") {
  GeneratorParams g;
  g.kind = "random_uniform";
  g.level = 6;
  g.count = 16;
  g.seed = 4;
  BadProjectionConfig c;
  c.mu = generate(g);
  c.bottom = 8;
  c.top = -6;
  c.mode = SampleMode{false, 300, 2};
  c.f.assign(c.mu.size(), 1.0);
  ExperimentResult flat = exp_bad_projection(c);
  for (const auto& p : flat.points) CHECK(p.estimate <= 1e-12);

  Rng rng(3);
  for (double& v : c.f) v = uniform01(rng) - 0.5;
  ExperimentResult r = exp_bad_projection(c);
  CHECK(r.checks[1].passed);
  CHECK(r.points.front().estimate > r.points.back().estimate);

  c.top = -2;
  CHECK_THROWS_AS(exp_bad_projection(c), ValidationError);
  CHECK(support_level(c.mu) == 0);
  CHECK(support_level(single(0.3)) == kTickBits);
}

TEST_CASE("collar averages on the lattice") {
  for (int n = 1; n <= 2; ++n) {
    // in the plane the collar share 1 - (1 - 2 lambda)^2 bends below linear at lambda = 1/4
    SurgeryConfig c = surgery(lattice(n, n == 1 ? 10 : 5), powers(n == 1 ? 2 : 3, 6));
    c.bottom = n == 1 ? 12 : 8;
    ExperimentResult r = exp_surgery_hand(c);
    for (const auto& p : r.points) {
      CHECK(p.ratio >= 0.5);
      CHECK(p.ratio <= 4.0 * n);
    }
    CHECK(r.slope >= 0.9);
    CHECK(r.passed());
  }
}

TEST_CASE("average of averages") {
  SurgeryConfig c = surgery(lattice(1, 9), {0.25, 0.1, 0.03});
  c.bottom = 11;
  ShiftStats fine = surgery_averages(c, 11, {0});
  // coarse step 2^-8 averaged over the 8 phases inside one coarse step
  Accumulator hand, follow;
  for (Tick ph = 0; ph < 8; ++ph) {
    ShiftStats coarse = surgery_averages(c, 8, {ph * side_ticks(11)});
    hand += coarse.hand[1];
    follow += coarse.follow[2];
  }
  CHECK(std::fabs(hand.value() / 8 - fine.hand[1]) <= 1e-12);
  CHECK(std::fabs(follow.value() / 8 - fine.follow[2]) <= 1e-12);
}

TEST_CASE("collar average vanishes with lambda for one atom") {
  SurgeryConfig c = surgery(single(0.375 + 1.0 / 4096), powers(2, 10));
  c.bottom = 16;
  ExperimentResult r = exp_surgery_hand(c);
  for (const auto& p : r.points) CHECK(p.estimate <= 4 * p.x + 1e-15);
  CHECK(r.points.back().estimate < 0.01);
}

TEST_CASE("follow estimate") {
  SurgeryConfig c = surgery(lattice(1, 10), powers(2, 8));
  ExperimentResult r = exp_follow_est(c);
  for (std::size_t k = 1; k < r.points.size(); ++k) CHECK(r.points[k].estimate < r.points[k - 1].estimate);
  CHECK(r.slope >= 0.45);
  CHECK(r.slope <= 1.1);

  // one atom: the difference of averages vanishes on every child
  SurgeryConfig one = surgery(single(0.375), powers(2, 8));
  ExperimentResult z = exp_follow_est(one);
  for (const auto& p : z.points) CHECK(p.estimate == 0.0);
  CHECK(z.passed());

  // a vertical wall of atoms crossing R
  std::vector<Atom> wall;
  for (int k = 0; k < 256; ++k) wall.push_back({Point{2, {t(0.3), t((k + 0.5) / 256)}}, 1.0 / 256});
  SurgeryConfig w = surgery(AtomicMeasure(2, wall), powers(2, 8));
  w.bottom = 10;
  ExperimentResult wr = exp_follow_est(w);
  CHECK(wr.slope >= 0.45);
  CHECK(std::isfinite(wr.fitted_constant));
}

TEST_CASE("sampled shifts agree with exhaustive ones") {
  SurgeryConfig c = surgery(lattice(2, 4), {0.25, 0.0625});
  c.bottom = 8;
  ShiftStats all = surgery_averages(c, 8, {0, 0});
  CHECK(all.exhaustive);
  c.shift_cap = 16;
  c.samples = 3000;
  ShiftStats some = surgery_averages(c, 8, {0, 0});
  CHECK_FALSE(some.exhaustive);
  CHECK(some.hand[0] == doctest::Approx(all.hand[0]).epsilon(0.1));
  CHECK(some.follow[0] == doctest::Approx(all.follow[0]).epsilon(0.15));
}

TEST_CASE("surgery validation") {
  SurgeryConfig c = surgery(lattice(1, 6), {0.6});
  CHECK_THROWS_AS(exp_surgery_hand(c), ValidationError);
  c.lambdas = {0.25};
  c.j_level = 1;
  CHECK_THROWS_AS(exp_surgery_hand(c), ValidationError);
  c.j_level = 3;
  c.omega = single(0.9);
  CHECK_THROWS_AS(exp_surgery_hand(c), ValidationError);
}

TEST_CASE("good lambda on one atom pair") {
  GoodLambdaConfig c;
  c.corpus.emplace_back(single(0.25), single(0.75));
  c.lambdas = {0.01, 0.1, 0.25, 0.49};
  ExperimentResult r = exp_good_lambda(c);
  ConstantsConfig cfg = constants_config_from_json(c.constants, c.corpus[0].first, c.corpus[0].second);
  ConstantsReport rep = ConstantsEngine(c.corpus[0].first, c.corpus[0].second, cfg).full_report();
  for (const auto& p : r.points) {
    double expect = 2.0 / (std::sqrt(rep.frak_a2) / p.x + 4.0 + std::pow(p.x, 0.25) * 2.0);
    CHECK(p.estimate == doctest::Approx(expect).epsilon(1e-12));
    CHECK(p.estimate < 0.5);
  }
  CHECK(r.details["best_lambda"][0]["lambda"].get<double>() == 0.49);

  ExperimentResult s = exp_one_dim_strong(c);
  CHECK(s.max_ratio == doctest::Approx(2.0 / (std::sqrt(rep.frak_a2) + 4.0)).epsilon(1e-12));
  CHECK(s.max_ratio < 1.0);

  GoodLambdaConfig empty;
  CHECK_THROWS_AS(exp_one_dim_strong(empty), ValidationError);
  GoodLambdaConfig plane;
  plane.corpus.emplace_back(AtomicMeasure(2, {{Point{2, {t(0.1), t(0.1)}}, 1.0}}),
                            AtomicMeasure(2, {{Point{2, {t(0.7), t(0.1)}}, 1.0}}));
  CHECK_THROWS_AS(exp_one_dim_strong(plane), ValidationError);
}

TEST_CASE("good lambda corpus") {
  CorpusSpec s;
  s.pairs = 6;
  std::vector<MeasurePair> a = make_corpus(s), b = make_corpus(s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(measure_to_json(a[i].first).dump() == measure_to_json(b[i].first).dump());
    CHECK(a[i].first.size() <= 32);
  }
  GoodLambdaConfig c;
  c.corpus = a;
  c.constants = {{"grids", 8}};
  ExperimentResult r = exp_good_lambda(c);
  CHECK(std::isfinite(r.max_ratio));
  CHECK(r.max_ratio > 0.0);
}

TEST_CASE("appendix forms") {
  AppendixConfig c;
  c.corpus = make_appendix_corpus(2, 6, 4);
  c.constants = {{"M", 8}};
  c.grids = 8;
  ExperimentResult r = exp_appendix_parts(c);
  CHECK(r.checks[0].passed);
  CHECK(r.fitted_constant > 0.0);

  c.corpus[0].f[0] += 1.0;
  CHECK_THROWS_AS(exp_appendix_parts(c), ValidationError);
}

TEST_CASE("reports are independent of the thread count") {
  const std::vector<std::pair<std::string, nlohmann::json>> runs = {
      {"cond_prob", {{"M", 8}, {"r", {2, 3}}}},
      {"bad_grid", {{"M", 10}, {"samples", 500}, {"Q", {{"lower", {"0.0361328125"}}, {"side", "0.0078125"}}}}},
      {"bad_projection", {{"samples", 60}, {"measure", {{"kind", "random_uniform"}, {"count", 8}, {"level", 5}}}}},
      {"surgery_hand", {{"omega", {{"kind", "lattice"}, {"level", 7}}}, {"M", 9}}},
      {"follow_est", {{"omega", {{"kind", "lattice"}, {"level", 7}}}, {"M", 9}}},
      {"good_lambda", {{"corpus", {{"pairs", 3}}}, {"constants", {{"grids", 2}}}}},
      {"appendix", {{"corpus", {{"count", 2}, {"atoms", 5}}}, {"grids", 4}}},
  };
  for (const auto& [name, cfg] : runs) {
    std::string one = result_to_json(run_experiment(name, cfg, 1)).dump();
    std::string three = result_to_json(run_experiment(name, cfg, 3)).dump();
    CHECK_MESSAGE(one == three, name);
  }
  CHECK_THROWS_AS(run_experiment("nope", nlohmann::json::object(), 1), ValidationError);
  CHECK_THROWS_AS(run_experiment("cond_prob", {{"M", "x"}}, 1), ValidationError);
}

TEST_CASE("sweep csv") {
  ExperimentResult r;
  r.parameter = "r";
  r.slope = -0.5;
  r.points.push_back({2.0, 0.5, 0.01, 1.0, 10});
  std::string csv = result_to_csv(r);
  CHECK(csv == "lambda_or_r,estimate,stderr,slope,ratio\n2,0.5,0.01,-0.5,1\n");
}

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "weightlab/constants.hpp"

namespace weightlab {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t count = 0;
  bool exhaustive = true;
};

struct SampleMode {
  bool exhaustive = true;
  std::uint64_t samples = 0;
  std::uint64_t seed = 1;
  std::uint64_t cap = std::uint64_t{1} << 20;
};

// Uniform average of a statistic over the translation grids of one window.
// Sampled grid i uses derive_seed(seed, i).
Estimate mc_expect(const std::function<double(const Grid&)>& stat, int dim, int bottom, int top,
                   const SampleMode& mode, int threads = 1);
// Several statistics evaluated on the same grids.
std::vector<Estimate> mc_expect_many(const std::function<std::vector<double>(const Grid&)>& stat,
                                     std::size_t width, int dim, int bottom, int top, const SampleMode& mode,
                                     int threads = 1);

struct SweepPoint {
  double x = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double ratio = 0.0;
  std::uint64_t samples = 0;
};

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  std::string relation = "<=";  // value <relation> bound
  bool passed = false;
};

struct ExperimentResult {
  std::string name;
  std::string parameter;  // "r" or "lambda"
  std::vector<SweepPoint> points;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double fitted_constant = 0.0;
  double max_ratio = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<Check> checks;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  bool passed() const;
  void check(const std::string& name, double value, const std::string& relation, double bound);
};

nlohmann::ordered_json result_to_json(const ExperimentResult& r);
// Columns: lambda_or_r, estimate, stderr, slope, ratio.
std::string result_to_csv(const ExperimentResult& r);

// Slope of log2(estimate) against x (or log2 x), skipping zero estimates.
double log_slope(const std::vector<SweepPoint>& pts, bool log_x);

struct CondProbConfig {
  int dim = 1;
  int bottom = 10;
  int top = 0;
  std::vector<int> r_values{2, 3, 4, 5, 6};
  double eps = 0.45;
  SampleMode mode;
  double slope_bound = -0.3825;
  int threads = 1;
};

// P(I bad | I in D) for I = [0, 2^-l)^n averaged over the levels
// l = top + max r .. bottom, per r.
ExperimentResult exp_cond_prob_bad(const CondProbConfig& c);

struct BadGridConfig {
  int dim = 1;
  int bottom = 14;
  int top = 0;
  Cube q = make_cube(1, 10, {75 * (Tick{1} << 16)});
  std::vector<int> r_values{2, 3, 4, 5, 6};
  double eps = 0.45;
  SampleMode mode{false, 10000, 1};
  double slope_bound = -0.3825;
  int threads = 1;
};

ExperimentResult exp_bad_grid_prob(const BadGridConfig& c);

struct BadProjectionConfig {
  AtomicMeasure mu;
  std::vector<double> f;
  Cube q = make_cube(1, 3, {5 * (Tick{1} << 24)});
  int bottom = 9;
  int top = -6;
  std::vector<int> r_values{2, 3, 4, 5, 6};
  double eps = 0.45;
  SampleMode mode{false, 10000, 1};
  double slope_bound = -0.19125;
  int threads = 1;
};

// Level of the smallest dyadic cube holding every atom.
int support_level(const AtomicMeasure& mu);

ExperimentResult exp_bad_projection(const BadProjectionConfig& c);

struct SurgeryConfig {
  AtomicMeasure omega;
  Cube r_cube = make_cube(1, 2, {Tick{1} << 28});
  int j_level = 3;
  int bottom = 12;
  std::vector<double> lambdas;
  double slope_bound = 0.9;
  // exhaustive shifts when their number is at most this, else sampled
  std::uint64_t shift_cap = std::uint64_t{1} << 16;
  std::uint64_t samples = 4096;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

// Exact average of one statistic over translations by multiples of
// 2^-step_level starting at phase (ticks, per axis), within one period.
struct ShiftStats {
  std::vector<double> hand;    // per lambda
  std::vector<double> follow;  // per lambda
  std::vector<std::vector<double>> follow_child;  // per lambda, per child
  std::vector<double> exceed;  // per lambda: fraction of shifts past the sqrt(lambda) threshold
  std::uint64_t shifts = 0;
  bool exhaustive = true;
};

ShiftStats surgery_averages(const SurgeryConfig& c, int step_level, const std::vector<Tick>& phase);

ExperimentResult exp_surgery_hand(const SurgeryConfig& c);
ExperimentResult exp_follow_est(const SurgeryConfig& c);

struct CorpusSpec {
  int pairs = 50;
  int dim = 1;
  int max_atoms = 32;
  int level = 9;
  std::uint64_t seed = 1;
};

using MeasurePair = std::pair<AtomicMeasure, AtomicMeasure>;

std::vector<MeasurePair> make_corpus(const CorpusSpec& s);

struct GoodLambdaConfig {
  std::vector<MeasurePair> corpus;
  nlohmann::json constants = nlohmann::json::object();  // constants config, shared by every pair
  std::vector<double> lambdas{1.0 / 64, 1.0 / 16, 0.25, 0.45};
  int growth = 2;  // family enlargement factor for the stability check
  double drift_bound = 0.05;
  double baseline_slack = 0.10;
  nlohmann::json baseline;  // {"good_lambda_max_ratio": x, "strong_max_ratio": y} or null
  int threads = 1;
};

ExperimentResult exp_good_lambda(const GoodLambdaConfig& c);
ExperimentResult exp_one_dim_strong(const GoodLambdaConfig& c);

struct AppendixInstance {
  AtomicMeasure sigma, omega;
  std::vector<double> f, g;
};

struct AppendixConfig {
  std::vector<AppendixInstance> corpus;
  nlohmann::json constants = nlohmann::json::object();
  int grids = 256;
  std::vector<double> lambdas{1.0 / 16, 0.25};
  int threads = 1;
};

std::vector<AppendixInstance> make_appendix_corpus(int count, int atoms, std::uint64_t seed);

ExperimentResult exp_appendix_parts(const AppendixConfig& c);

// Runs an experiment by name from a JSON configuration: cond_prob, bad_grid,
// bad_projection, surgery_hand, follow_est, good_lambda, one_dim_strong, appendix.
ExperimentResult run_experiment(const std::string& name, const nlohmann::json& config, int threads);
std::vector<std::string> experiment_names();

}  // namespace weightlab

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "weightlab/weightlab.h"

namespace {

using ojson = nlohmann::ordered_json;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw Failure{code, msg}; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(2, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(2, "malformed JSON in '" + path + "': " + e.what());
  }
}

// write-temp-then-rename
void write_atomic(const std::string& path, const std::string& text) {
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(2, "cannot write '" + path + "'");
    out << text;
    out.flush();
    if (!out) fail(4, "write to '" + path + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(4, "cannot move output into '" + path + "': " + ec.message());
  }
}

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  wl_string_free(s);
  return out;
}

void check(wl_status st) {
  if (st == WL_OK || st == WL_ERR_THRESHOLD) return;
  fail(st, wl_last_error());
}

struct Common {
  int threads = 0;
  bool no_timestamp = false;
  std::string output;
};

std::string stamped(const std::string& doc_text, const Common& c) {
  if (c.no_timestamp) return doc_text;
  ojson doc = ojson::parse(doc_text);
  doc["timestamp"] = utc_now();
  return doc.dump(2) + "\n";
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <class T>
void put(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

class Measure {
 public:
  explicit Measure(const std::string& path) {
    std::string text = read_file(path);
    check(wl_measure_from_json(text.c_str(), &m_));
  }
  ~Measure() { wl_measure_free(m_); }
  Measure(const Measure&) = delete;
  Measure& operator=(const Measure&) = delete;
  const wl_measure* get() const { return m_; }

 private:
  wl_measure* m_ = nullptr;
};

// Runs one experiment and writes its JSON, plus CSV when asked. Returns the exit code.
int run_and_write(const std::string& name, const nlohmann::json& cfg, const Common& c, const std::string& csv_path) {
  char* json_out = nullptr;
  char* csv_out = nullptr;
  std::string text = cfg.dump();
  wl_status st = wl_run_experiment(name.c_str(), text.c_str(), c.threads, &json_out, &csv_out);
  std::string doc = take(json_out), csv = take(csv_out);
  check(st);
  if (ends_with(c.output, ".csv")) {
    write_atomic(c.output, csv);
  } else {
    write_atomic(c.output, stamped(doc, c));
  }
  if (!csv_path.empty()) write_atomic(csv_path, csv);
  if (st == WL_ERR_THRESHOLD) {
    std::cerr << ojson{{"error", "threshold"}, {"code", 3}, {"message", wl_last_error()}}.dump() << "\n";
    return 3;
  }
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool needs_output = true) {
  sub->add_option("--threads", c.threads, "worker threads (0: WEIGHTLAB_THREADS or 1)")->check(CLI::NonNegativeNumber);
  sub->add_flag("--no-timestamp", c.no_timestamp, "omit the timestamp field");
  auto* o = sub->add_option("-o,--output", c.output, "output file");
  if (needs_output) o->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-weight dyadic harmonic analysis laboratory"};
  app.set_version_flag("--version", std::string(wl_version()));
  app.require_subcommand(1);

  // gen
  Common gen_c;
  std::string kind = "lattice";
  std::optional<int> gen_n, gen_level, gen_count, gen_depth, gen_res;
  std::optional<std::uint64_t> gen_seed;
  std::optional<double> gen_ratio, gen_side, gen_mmin, gen_mmax;
  auto* gen = app.add_subcommand("gen", "generate an atomic measure");
  gen->add_option("--kind", kind)->check(CLI::IsMember({"lattice", "random_uniform", "cantor", "point_masses"}));
  gen->add_option("--n", gen_n, "dimension");
  gen->add_option("--level", gen_level);
  gen->add_option("--count", gen_count);
  gen->add_option("--depth", gen_depth);
  gen->add_option("--ratio", gen_ratio, "cantor mass share of the left piece");
  gen->add_option("--resolution", gen_res);
  gen->add_option("--box-side", gen_side);
  gen->add_option("--mass-min", gen_mmin);
  gen->add_option("--mass-max", gen_mmax);
  gen->add_option("--seed", gen_seed);
  std::string gen_params;
  gen->add_option("--params", gen_params, "generator parameters as a JSON file");
  add_common(gen, gen_c);

  // constants
  Common con_c;
  std::string sigma_path, omega_path, con_config;
  std::optional<double> alpha, eps, delta, big_r;
  std::optional<int> con_m, con_n, con_r, rho, grids, d_part, ell_max;
  std::optional<std::string> component, norm_method, truncation;
  std::optional<double> tau;
  std::optional<std::uint64_t> con_seed;
  std::vector<double> con_lambda;
  auto* con = app.add_subcommand("constants", "every constant of a measure pair");
  con->add_option("--sigma", sigma_path)->required();
  con->add_option("--omega", omega_path)->required();
  con->add_option("--config", con_config, "constants config JSON file; flags override it");
  con->add_option("--alpha", alpha);
  con->add_option("--component", component, "kernel component index or 'vector'");
  con->add_option("--truncation", truncation)->check(CLI::IsMember({"none", "tangent"}));
  con->add_option("--delta", delta);
  con->add_option("--R", big_r);
  con->add_option("--M", con_m);
  con->add_option("--N", con_n);
  con->add_option("--r", con_r);
  con->add_option("--eps", eps);
  con->add_option("--rho", rho);
  con->add_option("--tau", tau);
  con->add_option("--grids", grids);
  con->add_option("--seed", con_seed);
  con->add_option("--d-part", d_part);
  con->add_option("--ell-max", ell_max);
  con->add_option("--norm-method", norm_method)->check(CLI::IsMember({"auto", "dense", "power"}));
  con->add_option("--lambda", con_lambda)->delimiter(',');
  add_common(con, con_c);

  // goodlambda
  Common gl_c;
  std::string gl_config, gl_baseline, gl_csv;
  std::optional<int> gl_pairs, gl_atoms, gl_level, gl_grids, gl_m;
  std::optional<std::uint64_t> gl_seed;
  std::vector<double> gl_lambda;
  bool gl_strong = false;
  auto* gl = app.add_subcommand("goodlambda", "good-lambda ratios over a seeded corpus");
  gl->add_option("--config", gl_config, "experiment config JSON file; flags override it");
  gl->add_option("--pairs", gl_pairs);
  gl->add_option("--max-atoms", gl_atoms);
  gl->add_option("--level", gl_level);
  gl->add_option("--seed", gl_seed);
  gl->add_option("--grids", gl_grids);
  gl->add_option("--M", gl_m);
  gl->add_option("--lambda", gl_lambda)->delimiter(',');
  gl->add_option("--baseline", gl_baseline, "regression baseline JSON file");
  gl->add_flag("--strong", gl_strong, "one-dimensional strong ratio instead");
  gl->add_option("--csv", gl_csv);
  add_common(gl, gl_c);

  // surgery
  Common su_c;
  std::string su_check = "hand", su_config, su_omega, su_csv;
  std::optional<int> su_m, su_level, su_n, su_j;
  std::optional<std::uint64_t> su_seed, su_samples, su_cap;
  std::vector<double> su_lambda;
  auto* su = app.add_subcommand("surgery", "translation-averaged collar estimates");
  su->add_option("--check", su_check)->check(CLI::IsMember({"hand", "followest"}));
  su->add_option("--config", su_config);
  su->add_option("--omega", su_omega, "measure file (default: lattice)");
  su->add_option("--lambda", su_lambda)->delimiter(',');
  su->add_option("--M", su_m);
  su->add_option("--level", su_level, "lattice level of the default measure");
  su->add_option("--n", su_n, "dimension of the default lattice");
  su->add_option("--J-level", su_j);
  su->add_option("--samples", su_samples);
  su->add_option("--shift-cap", su_cap);
  su->add_option("--seed", su_seed);
  su->add_option("--csv", su_csv);
  add_common(su, su_c);

  // probe-goodness
  Common pg_c;
  std::string pg_exp = "cond_prob", pg_config, pg_measure, pg_csv;
  std::optional<int> pg_m, pg_n, pg_dim;
  std::optional<double> pg_eps;
  std::optional<std::uint64_t> pg_samples, pg_seed;
  std::vector<int> pg_r;
  bool pg_exhaustive = false, pg_sampled = false;
  auto* pg = app.add_subcommand("probe-goodness", "bad-cube and bad-grid probabilities");
  pg->add_option("--experiment", pg_exp)
      ->check(CLI::IsMember({"cond_prob", "bad_grid", "bad_projection", "appendix"}));
  pg->add_option("--config", pg_config);
  pg->add_option("--measure", pg_measure, "measure file for bad_projection");
  pg->add_option("--M", pg_m);
  pg->add_option("--N", pg_n);
  pg->add_option("--n", pg_dim);
  pg->add_option("--r", pg_r)->delimiter(',');
  pg->add_option("--eps", pg_eps);
  pg->add_option("--samples", pg_samples);
  pg->add_option("--seed", pg_seed);
  pg->add_flag("--exhaustive", pg_exhaustive);
  pg->add_flag("--sampled", pg_sampled);
  pg->add_option("--csv", pg_csv);
  add_common(pg, pg_c);

  // cauchy
  Common ca_c;
  std::string curve = "zero", ca_config;
  std::optional<double> slope, amp, freq;
  std::vector<double> coeffs, interval;
  std::optional<int> panels, ca_level;
  auto* ca = app.add_subcommand("cauchy", "Cauchy integral b-testing ratio on a graph curve");
  ca->add_option("--config", ca_config);
  ca->add_option("--curve", curve)->check(CLI::IsMember({"zero", "linear", "sine", "poly"}));
  ca->add_option("--slope", slope);
  ca->add_option("--amp", amp);
  ca->add_option("--freq", freq);
  ca->add_option("--coeffs", coeffs)->delimiter(',');
  ca->add_option("--interval", interval)->delimiter(',')->expected(2);
  ca->add_option("--panels", panels);
  ca->add_option("--level", ca_level, "lattice level of the atomic check (0 skips it)");
  add_common(ca, ca_c);

  // report
  Common re_c;
  std::vector<std::string> inputs;
  auto* re = app.add_subcommand("report", "merge experiment results into one CSV");
  re->add_option("inputs", inputs, "experiment result JSON files")->required();
  add_common(re, re_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << ojson{{"error", "validation"}, {"code", 2}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    if (*gen) {
      nlohmann::json p = gen_params.empty() ? nlohmann::json::object() : read_json(gen_params);
      if (!p.is_object()) fail(2, "generator parameters must be an object");
      if (gen->count("--kind") || !p.contains("kind")) p["kind"] = kind;
      put(p, "dim", gen_n);
      put(p, "level", gen_level);
      put(p, "count", gen_count);
      put(p, "depth", gen_depth);
      put(p, "ratio", gen_ratio);
      put(p, "resolution", gen_res);
      put(p, "box_side", gen_side);
      put(p, "mass_min", gen_mmin);
      put(p, "mass_max", gen_mmax);
      put(p, "seed", gen_seed);
      wl_measure* m = nullptr;
      check(wl_measure_generate(p.dump().c_str(), &m));
      char* text = nullptr;
      wl_status st = wl_measure_to_json(m, &text);
      wl_measure_free(m);
      std::string doc = take(text);
      check(st);
      write_atomic(gen_c.output, stamped(doc, gen_c));
      return 0;
    }
    if (*con) {
      nlohmann::json j = con_config.empty() ? nlohmann::json::object() : read_json(con_config);
      if (!j.is_object()) fail(2, "constants config must be an object");
      put(j, "alpha", alpha);
      if (component) {
        if (*component == "vector") {
          j["component"] = "vector";
        } else {
          try {
            j["component"] = std::stoi(*component);
          } catch (const std::exception&) {
            fail(2, "--component must be an index or 'vector'");
          }
        }
      }
      put(j, "truncation", truncation);
      put(j, "delta", delta);
      put(j, "R", big_r);
      put(j, "M", con_m);
      put(j, "N", con_n);
      put(j, "r", con_r);
      put(j, "eps", eps);
      put(j, "rho", rho);
      put(j, "tau", tau);
      put(j, "grids", grids);
      put(j, "seed", con_seed);
      put(j, "d_part", d_part);
      put(j, "ell_max", ell_max);
      put(j, "norm_method", norm_method);
      if (!con_lambda.empty()) j["lambda"] = con_lambda;
      Measure s(sigma_path), w(omega_path);
      char* out = nullptr;
      wl_status st = wl_constants_report(s.get(), w.get(), j.dump().c_str(), con_c.threads, &out);
      std::string doc = take(out);
      check(st);
      write_atomic(con_c.output, stamped(doc, con_c));
      return 0;
    }
    if (*gl) {
      nlohmann::json j = gl_config.empty() ? nlohmann::json::object() : read_json(gl_config);
      if (!j.is_object()) fail(2, "experiment config must be an object");
      if (gl_pairs || gl_atoms || gl_level || gl_seed) {
        nlohmann::json corpus = j.value("corpus", nlohmann::json::object());
        if (!corpus.is_object()) fail(2, "corpus flags need a generated corpus");
        put(corpus, "pairs", gl_pairs);
        put(corpus, "max_atoms", gl_atoms);
        put(corpus, "level", gl_level);
        put(corpus, "seed", gl_seed);
        j["corpus"] = corpus;
      }
      if (gl_grids || gl_m) {
        nlohmann::json cons = j.value("constants", nlohmann::json::object());
        put(cons, "grids", gl_grids);
        put(cons, "M", gl_m);
        j["constants"] = cons;
      }
      if (!gl_lambda.empty()) j["lambda"] = gl_lambda;
      if (!gl_baseline.empty()) j["baseline"] = read_json(gl_baseline);
      return run_and_write(gl_strong ? "one_dim_strong" : "good_lambda", j, gl_c, gl_csv);
    }
    if (*su) {
      nlohmann::json j = su_config.empty() ? nlohmann::json::object() : read_json(su_config);
      if (!j.is_object()) fail(2, "experiment config must be an object");
      if (!su_omega.empty()) {
        j["omega"] = read_json(su_omega);
      } else if (su_level || su_n) {
        nlohmann::json g = {{"kind", "lattice"}, {"level", su_level.value_or(10)}, {"dim", su_n.value_or(1)}};
        j["omega"] = g;
      }
      if (!su_lambda.empty()) j["lambda"] = su_lambda;
      put(j, "M", su_m);
      put(j, "J_level", su_j);
      put(j, "samples", su_samples);
      put(j, "shift_cap", su_cap);
      put(j, "seed", su_seed);
      return run_and_write(su_check == "hand" ? "surgery_hand" : "follow_est", j, su_c, su_csv);
    }
    if (*pg) {
      nlohmann::json j = pg_config.empty() ? nlohmann::json::object() : read_json(pg_config);
      if (!j.is_object()) fail(2, "experiment config must be an object");
      if (!pg_measure.empty()) j["measure"] = read_json(pg_measure);
      put(j, "M", pg_m);
      put(j, "N", pg_n);
      put(j, "dim", pg_dim);
      if (!pg_r.empty()) j["r"] = pg_r;
      put(j, "eps", pg_eps);
      put(j, "samples", pg_samples);
      put(j, "seed", pg_seed);
      if (pg_exhaustive && pg_sampled) fail(2, "--exhaustive and --sampled exclude each other");
      if (pg_exhaustive) j["mode"] = "exhaustive";
      if (pg_sampled) j["mode"] = "sample";
      return run_and_write(pg_exp, j, pg_c, pg_csv);
    }
    if (*ca) {
      nlohmann::json j = ca_config.empty() ? nlohmann::json::object() : read_json(ca_config);
      if (!j.is_object()) fail(2, "cauchy config must be an object");
      if (ca->count("--curve") || slope || amp || freq || !coeffs.empty() || !j.contains("curve")) {
        nlohmann::json cv = {{"family", curve}};
        put(cv, "slope", slope);
        put(cv, "amp", amp);
        put(cv, "freq", freq);
        if (!coeffs.empty()) cv["coeffs"] = coeffs;
        j["curve"] = cv;
      }
      if (!interval.empty()) j["interval"] = interval;
      put(j, "panels", panels);
      put(j, "discrete_level", ca_level);
      char* out = nullptr;
      wl_status st = wl_cauchy_report(j.dump().c_str(), ca_c.threads, &out);
      std::string doc = take(out);
      check(st);
      write_atomic(ca_c.output, stamped(doc, ca_c));
      return 0;
    }
    if (*re) {
      std::vector<std::string> texts;
      for (const std::string& p : inputs) texts.push_back(read_file(p));
      std::vector<const char*> ptrs;
      for (const std::string& t : texts) ptrs.push_back(t.c_str());
      char* out = nullptr;
      wl_status st = wl_report_merge(ptrs.data(), ptrs.size(), &out);
      std::string csv = take(out);
      check(st);
      write_atomic(re_c.output, csv);
      return 0;
    }
  } catch (const Failure& f) {
    const char* kind_name = f.code == 2 ? "validation" : "internal";
    std::cerr << ojson{{"error", kind_name}, {"code", f.code}, {"message", f.message}}.dump() << "\n";
    return f.code;
  }
  return 0;
}

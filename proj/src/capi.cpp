#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <string>

#include "weightlab/cauchy.hpp"
#include "weightlab/constants.hpp"
#include "weightlab/experiments.hpp"
#include "weightlab/util.hpp"
#include "weightlab/weightlab.h"

struct wl_measure {
  weightlab::AtomicMeasure m;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // provenance keys kept verbatim
};

namespace {

thread_local std::string last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
wl_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const weightlab::ValidationError& e) {
    last_error = e.what();
    return WL_ERR_VALIDATION;
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return WL_ERR_VALIDATION;
  } catch (const std::exception& e) {
    last_error = e.what();
    return WL_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return WL_ERR_INTERNAL;
  }
}

nlohmann::json parse(const char* text, const char* what) {
  if (!text) throw weightlab::ValidationError(std::string(what) + " is null");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw weightlab::ValidationError(std::string("malformed ") + what + ": " + e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw weightlab::ValidationError(std::string(what) + " is null");
}

std::string cell(const nlohmann::json& v) {
  if (!v.is_number()) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
  return buf;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

extern "C" {

void wl_string_free(char* s) { std::free(s); }

const char* wl_version(void) { return weightlab::kVersion; }

const char* wl_last_error(void) { return last_error.c_str(); }

wl_status wl_measure_generate(const char* params_json, wl_measure** out) {
  return guarded([&] {
    need(out, "output");
    weightlab::GeneratorParams p = weightlab::generator_from_json(parse(params_json, "generator parameters"));
    nlohmann::ordered_json extra;
    extra["generator"] = weightlab::generator_to_json(p);
    extra["version"] = weightlab::kVersion;
    *out = new wl_measure{weightlab::generate(p), extra};
    return WL_OK;
  });
}

wl_status wl_measure_from_json(const char* text, wl_measure** out) {
  return guarded([&] {
    need(out, "output");
    need(text, "measure");
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw weightlab::ValidationError(std::string("malformed measure: ") + e.what());
    }
    int res = weightlab::kDefaultResolution;
    if (j.is_object() && j.contains("generator") && j["generator"].is_object()) {
      res = j["generator"].value("resolution", res);
    }
    weightlab::AtomicMeasure m = weightlab::measure_from_json(nlohmann::json::parse(text), res);
    j.erase("dim");
    j.erase("atoms");
    *out = new wl_measure{std::move(m), std::move(j)};
    return WL_OK;
  });
}

wl_status wl_measure_to_json(const wl_measure* m, char** out) {
  return guarded([&] {
    need(m, "measure");
    need(out, "output");
    nlohmann::ordered_json j = weightlab::measure_to_json(m->m);
    for (auto& [k, v] : m->extra.items()) j[k] = v;
    *out = dup(j.dump(2) + "\n");
    return WL_OK;
  });
}

size_t wl_measure_size(const wl_measure* m) { return m ? m->m.size() : 0; }

int wl_measure_dim(const wl_measure* m) { return m ? m->m.dim() : 0; }

double wl_measure_total_mass(const wl_measure* m) { return m ? m->m.total_mass() : 0.0; }

void wl_measure_free(wl_measure* m) { delete m; }

wl_status wl_constants_report(const wl_measure* sigma, const wl_measure* omega, const char* config_json, int threads,
                              char** out_json) {
  return guarded([&] {
    need(sigma, "sigma");
    need(omega, "omega");
    need(out_json, "output");
    nlohmann::json j = config_json ? parse(config_json, "constants config") : nlohmann::json::object();
    if (!j.is_object()) throw weightlab::ValidationError("constants config must be an object");
    j["threads"] = weightlab::resolve_threads(threads);
    weightlab::ConstantsConfig c = weightlab::constants_config_from_json(j, sigma->m, omega->m);
    weightlab::ConstantsReport r = weightlab::ConstantsEngine(sigma->m, omega->m, c).full_report();
    nlohmann::ordered_json doc;
    doc["version"] = weightlab::kVersion;
    nlohmann::ordered_json cfg = weightlab::constants_config_to_json(c);
    cfg.erase("threads");
    doc["config"] = cfg;
    doc["seeds"] = {c.family.seed, c.norm.seed};
    doc["report"] = weightlab::report_to_json(r);
    *out_json = dup(doc.dump(2) + "\n");
    return WL_OK;
  });
}

wl_status wl_experiment_names(char** out) {
  return guarded([&] {
    need(out, "output");
    std::string s;
    for (const std::string& n : weightlab::experiment_names()) s += (s.empty() ? "" : ",") + n;
    *out = dup(s);
    return WL_OK;
  });
}

wl_status wl_run_experiment(const char* name, const char* config_json, int threads, char** out_json,
                            char** out_csv) {
  return guarded([&] {
    need(name, "experiment name");
    need(out_json, "output");
    nlohmann::json j = config_json ? parse(config_json, "experiment config") : nlohmann::json::object();
    weightlab::ExperimentResult r = weightlab::run_experiment(name, j, threads);
    nlohmann::ordered_json doc;
    doc["version"] = weightlab::kVersion;
    nlohmann::ordered_json body = weightlab::result_to_json(r);
    for (auto& [k, v] : body.items()) doc[k] = v;
    *out_json = dup(doc.dump(2) + "\n");
    if (out_csv) *out_csv = dup(weightlab::result_to_csv(r));
    if (!r.passed()) {
      last_error = "a check failed";
      for (const weightlab::Check& c : r.checks) {
        if (c.passed) continue;
        std::ostringstream os;
        os << c.name << ": " << c.value << " " << c.relation << " " << c.bound << " does not hold";
        last_error = os.str();
        break;
      }
      return WL_ERR_THRESHOLD;
    }
    return WL_OK;
  });
}

wl_status wl_cauchy_report(const char* config_json, int threads, char** out_json) {
  return guarded([&] {
    need(out_json, "output");
    nlohmann::json j = config_json ? parse(config_json, "cauchy config") : nlohmann::json::object();
    weightlab::CauchyConfig c = weightlab::cauchy_config_from_json(j);
    c.quadrature.threads = weightlab::resolve_threads(threads);
    nlohmann::ordered_json doc;
    doc["version"] = weightlab::kVersion;
    doc["seeds"] = nlohmann::ordered_json::array();
    nlohmann::ordered_json body = weightlab::cauchy_report(c);
    for (auto& [k, v] : body.items()) doc[k] = v;
    *out_json = dup(doc.dump(2) + "\n");
    return WL_OK;
  });
}

wl_status wl_report_merge(const char* const* results_json, size_t count, char** out_csv) {
  return guarded([&] {
    need(out_csv, "output");
    if (count > 0) need(results_json, "result list");
    std::string out = "experiment,parameter,x,estimate,stderr,slope,ratio\n";
    for (size_t i = 0; i < count; ++i) {
      nlohmann::json r = parse(results_json[i], "experiment result");
      if (!r.is_object() || !r.contains("name") || !r.contains("parameter") || !r.contains("points")) {
        throw weightlab::ValidationError("result " + std::to_string(i) + " is not an experiment result");
      }
      std::string name = r["name"].get<std::string>(), param = r["parameter"].get<std::string>();
      nlohmann::json slope = r.value("slope", nlohmann::json());
      for (const auto& p : r["points"]) {
        out += csv_text(name) + ',' + csv_text(param) + ',' + cell(p.value(param, nlohmann::json())) + ',' +
               cell(p.value("estimate", nlohmann::json())) + ',' + cell(p.value("stderr", nlohmann::json())) + ',' +
               cell(slope) + ',' + cell(p.value("ratio", nlohmann::json())) + '\n';
      }
    }
    *out_csv = dup(out);
    return WL_OK;
  });
}

}  // extern "C"

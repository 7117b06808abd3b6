#include "itm/itm.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <new>
#include <string>

#include "itm/errors.hpp"
#include "itm/harness.hpp"
#include "json.hpp"

struct itm_config {
  itm::ExperimentConfig value;
};

struct itm_result {
  itm::RunOutput value;
};

namespace {

thread_local std::string g_last_error;

itm_status fail(itm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
itm_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return ITM_OK;
  } catch (const itm::ParseError& e) {
    return fail(ITM_ERR_PARSE, e.what());
  } catch (const itm::ContractViolation& e) {
    return fail(ITM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const itm::IoError& e) {
    return fail(ITM_ERR_IO, e.what());
  } catch (const itm::FactorizationError& e) {
    return fail(ITM_ERR_FACTORIZATION, e.what());
  } catch (const itm::NumericalError& e) {
    return fail(ITM_ERR_NUMERICAL, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ITM_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ITM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ITM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ITM_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  if (!p) throw itm::ContractViolation(std::string(what) + " must not be NULL");
}

double or_nan(const std::optional<double>& v) { return v ? *v : std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

extern "C" {

const char* itm_version(void) { return "1.0.0"; }

const char* itm_last_error(void) { return g_last_error.c_str(); }

const char* itm_status_name(itm_status status) {
  switch (status) {
    case ITM_OK:
      return "ok";
    case ITM_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case ITM_ERR_PARSE:
      return "parse error";
    case ITM_ERR_IO:
      return "i/o error";
    case ITM_ERR_FACTORIZATION:
      return "factorization error";
    case ITM_ERR_NUMERICAL:
      return "numerical error";
    case ITM_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

void itm_string_free(char* text) { std::free(text); }

itm_status itm_config_new(itm_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new itm_config{};
  });
}

itm_status itm_config_load(const char* path, itm_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new itm_config{itm::load_config(path)};
  });
}

itm_status itm_config_parse(const char* json_text, itm_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = nullptr;
    *out = new itm_config{itm::config_from_json(json_text)};
  });
}

itm_status itm_config_set(itm_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    itm::ExperimentConfig updated = config->value;
    itm::apply_override(updated, key, value);
    config->value = std::move(updated);
  });
}

itm_status itm_config_to_json(const itm_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = duplicate(itm::config_to_json(config->value));
  });
}

void itm_config_free(itm_config* config) { delete config; }

itm_status itm_run(const itm_config* config, itm_result** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    *out = new itm_result{itm::run_experiment(config->value)};
  });
}

itm_status itm_result_status(const itm_result* result, itm_run_status* out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    *out = static_cast<itm_run_status>(static_cast<int>(result->value.run.status));
  });
}

itm_status itm_result_row_count(const itm_result* result, size_t* out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    *out = result->value.run.trace.size();
  });
}

itm_status itm_result_row(const itm_result* result, size_t index, itm_trace_row* out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    const auto& trace = result->value.run.trace;
    if (index >= trace.size()) throw itm::ContractViolation("row index out of range");
    const auto& r = trace[index];
    out->k = r.k;
    out->objective = r.objective;
    out->gap = or_nan(r.gap);
    out->delta_requested = or_nan(r.delta_requested);
    out->delta_certified = or_nan(r.delta_certified);
    out->h_used = or_nan(r.h_used);
    out->inner_iterations = r.inner_iterations;
    out->hvp_count = r.hvp_count;
    out->grad_count = r.grad_count;
    out->time_s = result->value.config.record_wall_time ? r.time_s : std::numeric_limits<double>::quiet_NaN();
  });
}

itm_status itm_result_summary_json(const itm_result* result, char** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    *out = duplicate(itm::summary_json(result->value));
  });
}

itm_status itm_result_trace_csv(const itm_result* result, char** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    *out = duplicate(itm::trace_csv(result->value.run.trace, result->value.config.record_wall_time));
  });
}

void itm_result_free(itm_result* result) { delete result; }

itm_status itm_compare(const char* const* config_paths, size_t count, char** report_json, char** table_text) {
  return guarded([&] {
    need(config_paths, "config_paths");
    std::vector<itm::ExperimentConfig> configs;
    for (size_t i = 0; i < count; ++i) {
      need(config_paths[i], "config path");
      configs.push_back(itm::load_config(config_paths[i]));
    }
    const itm::ComparisonReport report = itm::compare(configs);
    std::string json_text = report.to_json();
    std::string table = report.table();
    char* a = report_json ? duplicate(json_text) : nullptr;
    char* b = nullptr;
    try {
      b = table_text ? duplicate(table) : nullptr;
    } catch (...) {
      std::free(a);
      throw;
    }
    if (report_json) *report_json = a;
    if (table_text) *table_text = b;
  });
}

itm_status itm_fit(const char* trace_path, const char* fstar, int64_t k_lo, int64_t k_hi, int order,
                   char** fit_json) {
  return guarded([&] {
    need(trace_path, "trace_path");
    need(fstar, "fstar");
    need(fit_json, "fit_json");
    const auto trace = itm::read_trace_csv(std::string(trace_path));
    if (trace.size() < 2) throw itm::ContractViolation("trace has fewer than two rows");
    double value = 0.0;
    std::string source;
    if (std::string(fstar) == "auto") {
      const auto summary = std::filesystem::path(trace_path).parent_path() / "summary.json";
      std::ifstream in(summary);
      nlohmann::json s;
      if (in) {
        s = nlohmann::json::parse(in);
      }
      if (s.is_object() && s.contains("fstar") && s.at("fstar").is_number()) {
        value = s.at("fstar").get<double>();
        source = "summary:" + s.value("fstar_source", std::string("unknown"));
      } else {
        value = trace.front().objective;
        for (const auto& r : trace) value = std::min(value, r.objective);
        source = "trace-minimum";
      }
    } else {
      char* end = nullptr;
      value = std::strtod(fstar, &end);
      if (end == fstar || *end != '\0' || !std::isfinite(value)) {
        throw itm::ContractViolation(std::string("fstar must be a number or auto, got '") + fstar + "'");
      }
      source = "given";
    }
    const long last = trace.back().k;
    const long lo = k_lo > 0 ? static_cast<long>(k_lo) : std::max(1L, last / 10);
    const long hi = k_hi > 0 ? static_cast<long>(k_hi) : last;
    itm::RateFit fit = itm::fit_rate(trace, value, lo, hi, order);
    fit.fstar_source = source;
    nlohmann::json j = nlohmann::json::parse(itm::rate_fit_json(fit));
    j["fstar"] = value;
    *fit_json = duplicate(j.dump(2) + "\n");
  });
}

}  // extern "C"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "itm/itm.h"

namespace {

int report(itm_status status) {
  std::cerr << "error (" << itm_status_name(status) << "): " << itm_last_error() << '\n';
  return 2;
}

int exit_code_for(itm_run_status status) {
  switch (status) {
    case ITM_RUN_SUBSOLVER_STALL:
      return 3;
    case ITM_RUN_DIVERGED:
      return 4;
    default:
      return 0;
  }
}

int do_run(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
  itm_config* config = nullptr;
  itm_status st = config_path.empty() ? itm_config_new(&config) : itm_config_load(config_path.c_str(), &config);
  if (st != ITM_OK) return report(st);
  for (const auto& [key, value] : overrides) {
    st = itm_config_set(config, key.c_str(), value.c_str());
    if (st != ITM_OK) {
      itm_config_free(config);
      return report(st);
    }
  }
  itm_result* result = nullptr;
  st = itm_run(config, &result);
  itm_config_free(config);
  if (st != ITM_OK) return report(st);
  char* summary = nullptr;
  st = itm_result_summary_json(result, &summary);
  if (st != ITM_OK) {
    itm_result_free(result);
    return report(st);
  }
  std::cout << summary;
  itm_string_free(summary);
  itm_run_status run_status = ITM_RUN_MAX_ITERATIONS;
  itm_result_status(result, &run_status);
  itm_result_free(result);
  return exit_code_for(run_status);
}

int do_compare(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<const char*> raw;
  for (const auto& p : paths) raw.push_back(p.c_str());
  char* json_text = nullptr;
  char* table = nullptr;
  const itm_status st = itm_compare(raw.data(), raw.size(), &json_text, &table);
  if (st != ITM_OK) return report(st);
  std::cout << table;
  if (!out.empty()) {
    std::ofstream f(out);
    f << json_text;
    if (!f) {
      std::cerr << "error: cannot write '" << out << "'\n";
      itm_string_free(json_text);
      itm_string_free(table);
      return 2;
    }
  }
  itm_string_free(json_text);
  itm_string_free(table);
  return 0;
}

int do_fit(const std::string& trace, const std::string& fstar, long k_lo, long k_hi, int order) {
  char* text = nullptr;
  const itm_status st = itm_fit(trace.c_str(), fstar.c_str(), k_lo, k_hi, order, &text);
  if (st != ITM_OK) return report(st);
  std::cout << text;
  itm_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact tensor methods: experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(itm_version()));

  auto* run = app.add_subcommand("run", "run one experiment");
  std::string config_path;
  run->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  std::map<std::string, std::string> overrides;
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"problem", "problem kind or inline JSON object"},
      {"method", "monotone1 | monotone2 | averaging | accelerated"},
      {"p", "order 1 or 2"},
      {"H", "fixed:<v> | lipschitz | linesearch:<v>"},
      {"policy", "constant:C | power:C:A | adaptive:C:A[:D1]"},
      {"subsolver", "exact | fgm"},
      {"stop", "bound | exact"},
      {"max-iters", "iteration budget"},
      {"target-gap", "stop once F - F* <= value"},
      {"seed", "random seed"},
      {"out", "output directory"},
  };
  std::map<std::string, std::string> values;
  for (const auto& [name, help] : flags) run->add_option("--" + name, values[name], help);

  auto* cmp = app.add_subcommand("compare", "run and compare several configs");
  std::vector<std::string> config_paths;
  std::string compare_out;
  cmp->add_option("--configs", config_paths, "config files")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", compare_out, "write the JSON report here");

  auto* fit = app.add_subcommand("fit", "fit the log-log rate of a trace");
  std::string trace_path, fstar = "auto", window;
  int order = 2;
  fit->add_option("--trace", trace_path, "trace.csv")->required()->check(CLI::ExistingFile);
  fit->add_option("--fstar", fstar, "F* value or auto");
  fit->add_option("--window", window, "k_lo:k_hi (default: last 90% of the run)");
  fit->add_option("--p", order, "order for the superlinear ratios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*run) {
    for (const auto& [name, help] : flags) {
      if (run->count("--" + name) > 0) overrides[name] = values[name];
    }
    return do_run(config_path, overrides);
  }
  if (*cmp) return do_compare(config_paths, compare_out);
  long k_lo = 0, k_hi = 0;
  if (!window.empty()) {
    const auto colon = window.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
      k_lo = std::stol(window.substr(0, colon));
      k_hi = std::stol(window.substr(colon + 1));
    } catch (const std::exception&) {
      std::cerr << "error: --window expects k_lo:k_hi\n";
      return 1;
    }
  }
  return do_fit(trace_path, fstar, k_lo, k_hi, order);
}

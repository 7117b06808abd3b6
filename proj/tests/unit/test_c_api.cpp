#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "itm/itm.h"

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "schema_version": 1,
  "name": "capi",
  "problem": {"kind": "logsumexp", "n": 6, "m": 36, "mu": 0.5},
  "method": "monotone1",
  "max_iterations": 12,
  "seed": 3
})";

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(itm_version()) == "1.0.0");
  CHECK(std::string(itm_status_name(ITM_OK)) == "ok");
  CHECK(std::string(itm_status_name(ITM_ERR_PARSE)) == "parse error");
}

TEST_CASE("error reporting") {
  itm_config* c = nullptr;
  CHECK(itm_config_parse("{ not json", &c) == ITM_ERR_PARSE);
  CHECK(c == nullptr);
  CHECK(std::strlen(itm_last_error()) > 0);
  CHECK(itm_config_parse("{\"method\": \"newton\"}", &c) == ITM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(itm_last_error()).find("newton") != std::string::npos);
  CHECK(itm_config_load("/nonexistent/config.json", &c) == ITM_ERR_IO);
  CHECK(itm_config_parse(nullptr, &c) == ITM_ERR_INVALID_ARGUMENT);
  CHECK(itm_config_new(nullptr) == ITM_ERR_INVALID_ARGUMENT);

  REQUIRE(itm_config_new(&c) == ITM_OK);
  CHECK(std::string(itm_last_error()).empty());
  CHECK(itm_config_set(c, "p", "5") == ITM_ERR_INVALID_ARGUMENT);
  CHECK(itm_config_set(c, "unknown", "1") == ITM_ERR_INVALID_ARGUMENT);
  CHECK(itm_config_set(c, "policy", "power:1:3") == ITM_OK);
  itm_config_free(c);
  itm_config_free(nullptr);
  itm_result_free(nullptr);
}

TEST_CASE("run through handles") {
  itm_config* c = nullptr;
  REQUIRE(itm_config_parse(kConfig, &c) == ITM_OK);
  REQUIRE(itm_config_set(c, "max-iters", "8") == ITM_OK);
  char* text = nullptr;
  REQUIRE(itm_config_to_json(c, &text) == ITM_OK);
  CHECK(std::string(text).find("\"max_iterations\": 8") != std::string::npos);
  itm_string_free(text);

  itm_result* r = nullptr;
  REQUIRE(itm_run(c, &r) == ITM_OK);
  size_t rows = 0;
  REQUIRE(itm_result_row_count(r, &rows) == ITM_OK);
  CHECK(rows == 9);
  itm_trace_row first{}, last{};
  REQUIRE(itm_result_row(r, 0, &first) == ITM_OK);
  REQUIRE(itm_result_row(r, rows - 1, &last) == ITM_OK);
  CHECK(first.k == 0);
  CHECK(std::isnan(first.h_used));
  CHECK(std::isnan(last.time_s));
  CHECK(last.objective < first.objective);
  CHECK(last.gap >= 0.0);
  CHECK(itm_result_row(r, rows, &last) == ITM_ERR_INVALID_ARGUMENT);
  itm_run_status status;
  REQUIRE(itm_result_status(r, &status) == ITM_OK);
  CHECK(status == ITM_RUN_MAX_ITERATIONS);

  char* summary = nullptr;
  REQUIRE(itm_result_summary_json(r, &summary) == ITM_OK);
  CHECK(std::string(summary).find("\"status\": \"max_iterations\"") != std::string::npos);
  itm_string_free(summary);
  char* csv = nullptr;
  REQUIRE(itm_result_trace_csv(r, &csv) == ITM_OK);
  CHECK(std::string(csv).rfind("k,F,gap,", 0) == 0);
  itm_string_free(csv);
  itm_result_free(r);
  itm_config_free(c);
}

TEST_CASE("compare and fit through files") {
  const fs::path dir = fs::temp_directory_path() / ("itm_capi_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string paths[2];
  const char* methods[2] = {"monotone1", "monotone2"};
  for (int i = 0; i < 2; ++i) {
    itm_config* c = nullptr;
    REQUIRE(itm_config_parse(kConfig, &c) == ITM_OK);
    REQUIRE(itm_config_set(c, "method", methods[i]) == ITM_OK);
    REQUIRE(itm_config_set(c, "out", (dir / methods[i]).c_str()) == ITM_OK);
    char* text = nullptr;
    REQUIRE(itm_config_to_json(c, &text) == ITM_OK);
    paths[i] = (dir / (std::string(methods[i]) + ".json")).string();
    std::ofstream(paths[i]) << text;
    itm_string_free(text);
    itm_config_free(c);
  }
  const char* argv[2] = {paths[0].c_str(), paths[1].c_str()};
  char* report = nullptr;
  char* table = nullptr;
  REQUIRE(itm_compare(argv, 2, &report, &table) == ITM_OK);
  CHECK(std::string(report).find("winners") != std::string::npos);
  CHECK(std::string(table).find("capi") != std::string::npos);
  itm_string_free(report);
  itm_string_free(table);
  CHECK(itm_compare(argv, 1, nullptr, nullptr) == ITM_ERR_INVALID_ARGUMENT);

  const std::string trace = (dir / "monotone1" / "trace.csv").string();
  char* fit = nullptr;
  REQUIRE(itm_fit(trace.c_str(), "auto", 0, 0, 2, &fit) == ITM_OK);
  CHECK(std::string(fit).find("summary:known") != std::string::npos);
  itm_string_free(fit);
  CHECK(itm_fit(trace.c_str(), "zero", 0, 0, 2, &fit) == ITM_ERR_INVALID_ARGUMENT);
  CHECK(itm_fit("/nonexistent/trace.csv", "0", 0, 0, 2, &fit) == ITM_ERR_IO);
  fs::remove_all(dir);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "itm/errors.hpp"
#include "itm/harness.hpp"
#include "json.hpp"

using namespace itm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("itm_harness_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "small";
  c.problem = ProblemSpec::defaults("logsumexp");
  c.problem.n = 6;
  c.problem.m = 36;
  c.problem.mu = 0.5;
  c.max_iterations = 15;
  c.seed = 3;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("fnv1a") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config JSON round trip") {
  ExperimentConfig c = small_config();
  c.method = "accelerated";
  c.h = HMode::line_search(0.5);
  c.policy = AccuracyPolicy::adaptive(0.005, 1);
  c.zeta = AccuracyPolicy::power_law(2, 4);
  c.subsolver = {SubsolverConfig::Kind::fgm, StopRule::exact};
  c.target_gap = 1e-8;
  c.problem.composite = CompositeSpec{"power_norm", 0.5, 3.0};
  c.x0 = "random:2";
  c.fstar = -1.25;
  const std::string text = config_to_json(c);
  const ExperimentConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.h.to_string() == "linesearch:0.5");
  CHECK(back.zeta->to_string() == "power:2:4");
  CHECK(*back.fstar == -1.25);
  CHECK(back.problem.composite->mu == 0.5);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("schema_version") == kSchemaVersion);

  ExperimentConfig v = small_config();
  v.x0 = "values";
  v.x0_values = {1, 2, 3, 4, 5, 6};
  CHECK(config_from_json(config_to_json(v)).x0_values == v.x0_values);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config_from_json("{\"method\": \"newton\"}"), ContractViolation);
  CHECK_THROWS_AS(config_from_json("{\"bogus\": 1}"), ContractViolation);
  CHECK_THROWS_AS(config_from_json("{\"schema_version\": 2}"), ContractViolation);
  CHECK_THROWS_AS(config_from_json("{\"p\": 3}"), ContractViolation);
  CHECK_THROWS_AS(config_from_json("{\"problem\": {\"kind\": \"svm\"}}"), ContractViolation);
  CHECK_THROWS_AS(config_from_json("{\"max_iterations\": \"ten\"}"), ContractViolation);
  try {
    config_from_json("{\n  \"name\": \"x\",\n  \"p\": 2,,\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
  const ExperimentConfig d = config_from_json("{}");
  CHECK(d.method == "monotone1");
  CHECK(d.problem.n == 100);
  CHECK(d.fstar_auto);
}

TEST_CASE("overrides") {
  ExperimentConfig c = small_config();
  apply_override(c, "method", "monotone2");
  apply_override(c, "p", "1");
  apply_override(c, "H", "fixed:3");
  apply_override(c, "policy", "constant:0.01");
  apply_override(c, "subsolver", "fgm");
  apply_override(c, "stop", "exact");
  apply_override(c, "max-iters", "7");
  apply_override(c, "target-gap", "1e-6");
  apply_override(c, "seed", "9");
  apply_override(c, "out", "dir");
  CHECK(c.method == "monotone2");
  CHECK(c.order == 1);
  CHECK(c.h.value == 3.0);
  CHECK(c.subsolver.kind == SubsolverConfig::Kind::fgm);
  CHECK(c.subsolver.stop == StopRule::exact);
  CHECK(c.max_iterations == 7);
  CHECK(*c.target_gap == 1e-6);
  CHECK(c.seed == 9);
  CHECK(c.out == "dir");
  apply_override(c, "problem", "powered_chain");
  CHECK(c.problem.n == 20);
  apply_override(c, "problem", "{\"kind\": \"logistic\", \"n\": 5, \"m\": 40}");
  CHECK(c.problem.m == 40);
  CHECK_THROWS_AS(apply_override(c, "method", "nope"), ContractViolation);
  CHECK(c.method == "monotone2");
  CHECK_THROWS_AS(apply_override(c, "colour", "red"), ContractViolation);
  CHECK_THROWS_AS(apply_override(c, "max-iters", "1.5"), ContractViolation);
  CHECK_THROWS_AS(apply_override(c, "seed", "-1"), ContractViolation);
}

TEST_CASE("problem construction") {
  auto spec = ProblemSpec::defaults("powered_chain");
  spec.n = 5;
  const auto chain = build_problem(spec, 1);
  CHECK(chain.dimension() == 5);
  CHECK(chain.optimum->value == 0.0);
  ExperimentConfig c = small_config();
  c.problem = spec;
  CHECK(resolve_x0(c, chain) == Vector::Ones(5));
  c.x0 = "constant:2";
  CHECK(resolve_x0(c, chain) == Vector::Constant(5, 2.0));
  c.x0 = "random:3";
  CHECK(chain.norm().primal_norm(resolve_x0(c, chain)) == doctest::Approx(3.0));
  c.x0 = "values";
  c.x0_values = {1, 2};
  CHECK_THROWS_AS(resolve_x0(c, chain), ContractViolation);

  auto lse = ProblemSpec::defaults("logsumexp");
  lse.n = 4;
  lse.m = 24;
  lse.composite = CompositeSpec{"power_norm", 1.0, 3.0};
  const auto with = build_problem(lse, 2);
  REQUIRE(with.optimum.has_value());
  CHECK(with.optimum->value == doctest::Approx(with.objective(Vector::Zero(4))));
  CHECK(canonical_problem(lse, 2) == canonical_problem(lse, 2));
  CHECK(canonical_problem(lse, 2) != canonical_problem(lse, 3));
  lse.seed = 2;
  CHECK(canonical_problem(lse, 7) == canonical_problem(lse, 2));
}

TEST_CASE("trace CSV round trip") {
  std::vector<TraceRecord> trace(3);
  trace[0] = {0, 1.5, 0.5, {}, {}, {}, 0, 0, 1, 0.0};
  trace[1] = {1, 1.25, 0.25, 0.125, 1e-17, 4.0, 3, 12, 5, 0.01};
  trace[2] = {2, 1.0000000000000002, 2.220446049250313e-16, 0.1, 0.0, 8.0, 7, 40, 9, 0.02};
  const std::string csv = trace_csv(trace, false);
  CHECK(csv.rfind("k,F,gap,delta_requested,delta_certified,H_used,inner_iters,hvp_count,grad_count,time_s\n", 0) == 0);
  CHECK(csv.find("0,1.5,0.5,,,,0,0,1,\n") != std::string::npos);
  std::istringstream in(csv);
  const auto back = read_trace_csv(in);
  REQUIRE(back.size() == 3);
  CHECK(back[2].objective == trace[2].objective);
  CHECK(*back[2].gap == *trace[2].gap);
  CHECK(*back[1].delta_certified == 1e-17);
  CHECK_FALSE(back[0].h_used.has_value());
  CHECK(back[2].hvp_count == 40);
  CHECK(trace_csv(back, false) == csv);
  CHECK(trace_csv(trace, true).find(",0.02\n") != std::string::npos);

  std::istringstream bad("k,F\n1,2\n");
  CHECK_THROWS_AS(read_trace_csv(bad), ParseError);
  std::istringstream bad_row(csv + "3,abc,,,,,0,0,0,\n");
  try {
    read_trace_csv(bad_row);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
  }
}

TEST_CASE("rate fit") {
  std::vector<TraceRecord> trace;
  for (long k = 1; k <= 50; ++k) trace.push_back({k, 3.0 + 7.0 / static_cast<double>(k * k)});
  const RateFit fit = fit_rate(trace, 3.0, 5, 50);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(std::exp(fit.intercept) == doctest::Approx(7.0).epsilon(1e-6));
  CHECK(fit.residual < 1e-9);
  CHECK_FALSE(fit.truncated);
  CHECK(fit.k_lo == 5);
  CHECK(fit.k_hi == 50);

  std::vector<TraceRecord> flat = trace;
  for (long k = 30; k <= 50; ++k) flat[static_cast<std::size_t>(k - 1)].objective = 3.0;
  const RateFit cut = fit_rate(flat, 3.0, 5, 50);
  CHECK(cut.truncated);
  CHECK(cut.k_hi == 29);
  CHECK(cut.slope == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK_THROWS_AS(fit_rate(flat, 3.0, 30, 50), ContractViolation);
  CHECK_THROWS_AS(fit_rate(trace, 3.0, 0, 50), ContractViolation);
}

TEST_CASE("runs are reproducible and write their artifacts") {
  const fs::path dir = scratch("run");
  ExperimentConfig c = small_config();
  c.out = (dir / "a").string();
  const RunOutput a = run_experiment(c);
  c.out = (dir / "b").string();
  const RunOutput b = run_experiment(c);
  CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
  CHECK(fs::exists(dir / "a" / "config.json"));
  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary.at("schema_version") == kSchemaVersion);
  CHECK(summary.at("fstar_source") == "known");
  CHECK(summary.at("iterations").get<long>() == static_cast<long>(a.run.trace.size()) - 1);
  CHECK(load_config((dir / "a" / "config.json").string()).max_iterations == 15);
  CHECK(a.run.objective == b.run.objective);
  fs::remove_all(dir);
}

TEST_CASE("reference optimum is cached") {
  const fs::path dir = scratch("fstar");
  auto spec = ProblemSpec::defaults("logistic");
  spec.n = 5;
  spec.m = 40;
  const double first = reference_fstar(spec, 4, 10, dir.string());
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    CHECK(e.path().filename().string().rfind("fstar-", 0) == 0);
  }
  CHECK(files == 1);
  CHECK(reference_fstar(spec, 4, 10, dir.string()) == first);
  CHECK(first < std::log(2.0));
  ExperimentConfig c = small_config();
  c.problem = spec;
  c.seed = 4;
  c.max_iterations = 10;
  c.cache_dir = dir.string();
  const RunOutput out = execute(c);
  CHECK(out.fstar_source == "reference-run");
  CHECK(*out.fstar == first);
  for (const auto& r : out.run.trace) CHECK(*r.gap >= -1e-12);
  fs::remove_all(dir);
}

TEST_CASE("comparison") {
  ExperimentConfig a = small_config();
  ExperimentConfig b = a;
  b.name = "twin";
  a.max_iterations = 40;
  b.max_iterations = 40;
  const ComparisonReport same = compare({a, b});
  CHECK(same.names == std::vector<std::string>{"small", "twin"});
  CHECK(same.winners.size() == 9);
  for (const auto& w : same.winners) {
    if (w.metric == "time") continue;
    if (w.values[0]) CHECK(w.winners.size() == 2);
  }
  CHECK(same.table().find("twin") != std::string::npos);
  const auto j = nlohmann::json::parse(same.to_json());
  CHECK(j.at("schema_version") == kSchemaVersion);

  ExperimentConfig other = a;
  other.seed = 4;
  CHECK_THROWS_AS(compare({a, other}), ContractViolation);
  other = a;
  other.problem.n = 7;
  CHECK_THROWS_AS(compare({a, other}), ContractViolation);
  CHECK_THROWS_AS(compare({a}), ContractViolation);
}

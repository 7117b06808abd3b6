#include "itm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "itm/errors.hpp"
#include "json.hpp"

namespace itm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const kTraceHeader = "k,F,gap,delta_requested,delta_certified,H_used,inner_iters,hvp_count,grad_count,time_s";

std::string number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string cell(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

std::optional<double> parse_cell(const std::string& text, std::size_t line) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw ParseError("bad trace cell '" + text + "'", line);
  return v;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

json fit_json(const RateFit& fit) {
  return {{"k_lo", fit.k_lo},
          {"k_hi", fit.k_hi},
          {"slope", fit.slope},
          {"intercept", fit.intercept},
          {"residual", fit.residual},
          {"truncated", fit.truncated},
          {"note", fit.note},
          {"fstar_source", fit.fstar_source},
          {"superlinear_ratios", fit.superlinear_ratios}};
}

}  // namespace

std::string rate_fit_json(const RateFit& fit) { return fit_json(fit).dump(2) + "\n"; }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// traces

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool record_wall_time) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.k << ',' << number(r.objective) << ',' << cell(r.gap) << ',' << cell(r.delta_requested) << ','
        << cell(r.delta_certified) << ',' << cell(r.h_used) << ',' << r.inner_iterations << ',' << r.hvp_count << ','
        << r.grad_count << ',' << (record_wall_time ? number(r.time_s) : std::string()) << '\n';
  }
}

std::string trace_csv(const std::vector<TraceRecord>& trace, bool record_wall_time) {
  std::ostringstream os;
  write_trace_csv(os, trace, record_wall_time);
  return os.str();
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty trace", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError("unexpected trace header '" + line + "'", 1);
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string part;
    std::istringstream ls(line);
    while (std::getline(ls, part, ',')) cells.push_back(part);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 10) throw ParseError("expected 10 columns, found " + std::to_string(cells.size()), line_no);
    TraceRecord r;
    const auto k = parse_cell(cells[0], line_no);
    const auto f = parse_cell(cells[1], line_no);
    if (!k || !f) throw ParseError("k and F are required", line_no);
    r.k = static_cast<long>(*k);
    r.objective = *f;
    r.gap = parse_cell(cells[2], line_no);
    r.delta_requested = parse_cell(cells[3], line_no);
    r.delta_certified = parse_cell(cells[4], line_no);
    r.h_used = parse_cell(cells[5], line_no);
    r.inner_iterations = static_cast<long>(parse_cell(cells[6], line_no).value_or(0.0));
    r.hvp_count = static_cast<std::uint64_t>(parse_cell(cells[7], line_no).value_or(0.0));
    r.grad_count = static_cast<std::uint64_t>(parse_cell(cells[8], line_no).value_or(0.0));
    r.time_s = parse_cell(cells[9], line_no).value_or(0.0);
    out.push_back(r);
  }
  return out;
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace '" + path + "'");
  return read_trace_csv(in);
}

// ---------------------------------------------------------------------------
// rate fit

RateFit fit_rate(const std::vector<TraceRecord>& trace, double fstar, long k_lo, long k_hi, int order) {
  require(k_lo >= 1 && k_hi >= k_lo, "fit window must satisfy 1 <= k_lo <= k_hi");
  const double plateau = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fstar));
  RateFit fit;
  fit.k_lo = k_lo;
  std::vector<double> lx, ly, gaps;
  for (const auto& r : trace) {
    if (r.k < k_lo || r.k > k_hi) continue;
    const double gap = r.objective - fstar;
    if (!(gap > plateau)) {
      fit.truncated = true;
      fit.note = "window cut at k = " + std::to_string(r.k) + " (gap at rounding plateau)";
      break;
    }
    lx.push_back(std::log(static_cast<double>(r.k)));
    ly.push_back(std::log(gap));
    gaps.push_back(gap);
    fit.k_hi = r.k;
  }
  if (lx.size() < 2) throw ContractViolation("rate fit needs at least two points above the plateau");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0.0, "rate fit needs distinct iteration indices");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  const double power = 0.5 * (order + 1.0);
  for (std::size_t i = 1; i + 1 < gaps.size(); ++i) fit.superlinear_ratios.push_back(gaps[i + 1] / std::pow(gaps[i - 1], power));
  return fit;
}

// ---------------------------------------------------------------------------
// reference optimum

double reference_fstar(const ProblemSpec& spec, std::uint64_t seed, long max_iterations, const std::string& cache_dir) {
  std::string key = canonical_problem(spec, seed) + "|iters=" + std::to_string(max_iterations);
  if (!spec.data.empty()) key += "|data=" + hex(fnv1a(read_file(spec.data)));
  const std::string digest = hex(fnv1a(key));
  const fs::path file = fs::path(cache_dir.empty() ? "." : cache_dir) / ("fstar-" + digest + ".json");

  std::error_code ec;
  if (fs::exists(file, ec)) {
    try {
      const json cached = json::parse(read_file(file.string()));
      if (cached.at("key").get<std::string>() == key) return cached.at("fstar").get<double>();
    } catch (const std::exception&) {
      // stale or corrupt entries are recomputed
    }
  }

  const ProblemInstance problem = build_problem(spec, seed);
  SolverConfig cfg;
  cfg.order = 2;
  cfg.h = problem.smooth->lipschitz(2) ? HMode::from_lipschitz() : HMode::line_search(1.0);
  cfg.policy = AccuracyPolicy::adaptive(1.0, 2.0);
  cfg.subsolver = {SubsolverConfig::Kind::exact, StopRule::bound};
  cfg.max_iterations = std::max(100L, 10 * max_iterations);
  cfg.x0 = Vector::Zero(problem.dimension());
  const SolverRun run = monotone_method_II(problem, cfg);
  double best = run.objective;
  for (const auto& r : run.trace) best = std::min(best, r.objective);

  fs::create_directories(file.parent_path(), ec);
  json entry = {{"schema_version", kSchemaVersion},
                {"key", key},
                {"fstar", best},
                {"iterations", static_cast<long>(run.trace.size()) - 1},
                {"status", to_string(run.status)}};
  try {
    write_file(file, entry.dump(2) + "\n");
  } catch (const IoError&) {
    // cache is best effort
  }
  return best;
}

// ---------------------------------------------------------------------------
// runs

RunOutput execute(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  out.config = config;
  const ProblemInstance problem = build_problem(config.problem, config.seed);
  const Vector x0 = resolve_x0(config, problem);

  if (problem.optimum) {
    out.fstar = problem.optimum->value;
    out.fstar_source = "known";
  } else if (config.fstar) {
    out.fstar = config.fstar;
    out.fstar_source = "config";
  } else if (config.fstar_auto) {
    out.fstar = reference_fstar(config.problem, config.seed, config.max_iterations, config.cache_dir);
    out.fstar_source = "reference-run";
  } else {
    out.fstar_source = "none";
  }

  std::function<bool()> over_budget;
  if (config.wall_time_budget) {
    const double budget = *config.wall_time_budget;
    over_budget = [t0, budget] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > budget;
    };
  }

  if (config.method == "accelerated") {
    AccelConfig ac;
    ac.order = config.order;
    ac.zeta = config.zeta;
    ac.inner_policy = config.inner_policy;
    ac.inner_subsolver = {SubsolverConfig::Kind::fgm, config.subsolver.stop};
    ac.max_iterations = config.max_iterations;
    ac.inner_max_iterations = config.inner_max_iterations;
    ac.target_gap = config.target_gap;
    if (!problem.optimum) ac.reference_value = out.fstar;
    ac.x0 = x0;
    ac.should_stop = over_budget;
    out.run = accelerated_method(problem, ac);
    if (config.h.kind != HMode::Kind::from_lipschitz) {
      out.run.warnings.push_back("the accelerated scheme ignores the H mode and uses H = pL_p of the subproblem");
    }
  } else {
    SolverConfig sc;
    sc.order = config.order;
    sc.h = config.h;
    sc.policy = config.policy;
    sc.subsolver = config.subsolver;
    sc.max_iterations = config.max_iterations;
    sc.target_gap = config.target_gap;
    sc.gradient_tolerance = config.gradient_tolerance;
    if (!problem.optimum) sc.reference_value = out.fstar;
    sc.accuracy_floor = config.accuracy_floor;
    sc.x0 = x0;
    if (over_budget) sc.stop_when = [over_budget](const Vector&, const Vector&) { return over_budget(); };
    if (config.method == "monotone1") {
      out.run = monotone_method_I(problem, sc);
    } else if (config.method == "monotone2") {
      out.run = monotone_method_II(problem, sc);
    } else if (config.method == "averaging") {
      out.run = averaging_method(problem, sc);
    } else {
      throw ContractViolation("unknown method '" + config.method + "'");
    }
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (out.fstar && out.run.trace.size() >= 3) {
    const long k_hi = out.run.trace.back().k;
    try {
      RateFit fit = fit_rate(out.run.trace, *out.fstar, std::max(1L, k_hi / 10), k_hi, config.order);
      fit.fstar_source = out.fstar_source;
      out.fit = std::move(fit);
    } catch (const ContractViolation&) {
      // too few points above the plateau
    }
  }
  return out;
}

std::string summary_json(const RunOutput& o) {
  const auto& run = o.run;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = o.config.name;
  j["method"] = o.config.method;
  j["problem"] = json::parse(canonical_problem(o.config.problem, o.config.seed));
  j["status"] = to_string(run.status);
  j["message"] = run.message;
  j["iterations"] = run.trace.empty() ? 0 : run.trace.back().k;
  j["accepted_steps"] = run.accepted_steps();
  j["final_objective"] = run.objective;
  j["final_gap"] = o.fstar ? json(run.objective - *o.fstar) : json(nullptr);
  j["fstar"] = optional_json(o.fstar);
  j["fstar_source"] = o.fstar_source;
  j["oracle_calls"] = {{"value", run.counters.value},
                       {"gradient", run.counters.gradient},
                       {"hessian_vec", run.counters.hessian_vec}};
  j["radius_proxy"] = run.radius_proxy;
  j["wall_time_s"] = o.wall_time_s;
  j["warnings"] = run.warnings;
  j["rate_fit"] = o.fit ? fit_json(*o.fit) : json(nullptr);
  return j.dump(2) + "\n";
}

RunOutput run_experiment(const ExperimentConfig& config) {
  RunOutput out = execute(config);
  if (!config.out.empty()) {
    const fs::path dir(config.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + config.out + "': " + ec.message());
    write_file(dir / "trace.csv", trace_csv(out.run.trace, config.record_wall_time));
    write_file(dir / "config.json", config_to_json(config));
    write_file(dir / "summary.json", summary_json(out));
  }
  return out;
}

// ---------------------------------------------------------------------------
// comparison

namespace {

std::optional<double> first_reaching(const RunOutput& o, double target, const std::string& metric) {
  for (const auto& r : o.run.trace) {
    if (!r.gap || *r.gap > target) continue;
    if (metric == "iterations") return static_cast<double>(r.k);
    if (metric == "hvp") return static_cast<double>(r.hvp_count);
    return r.time_s;
  }
  return std::nullopt;
}

bool ties(const std::string& metric, double a, double best) {
  if (metric != "time") return a == best;
  // wall clock jitter
  return a <= best + std::max(5e-3, 0.25 * best);
}

}  // namespace

ComparisonReport compare_runs(std::vector<RunOutput> runs) {
  require(runs.size() >= 2, "compare needs at least two runs");
  const std::string problem = canonical_problem(runs[0].config.problem, runs[0].config.seed);
  for (const auto& r : runs) {
    if (canonical_problem(r.config.problem, r.config.seed) != problem || r.config.seed != runs[0].config.seed) {
      throw ContractViolation("compare: configs must share the problem instance and seed ('" + r.config.name +
                              "' differs from '" + runs[0].config.name + "')");
    }
  }
  ComparisonReport report;
  for (const auto& r : runs) report.names.push_back(r.config.name);
  for (const char* metric : {"iterations", "hvp", "time"}) {
    for (double target : comparison_targets()) {
      MetricWinner w;
      w.metric = metric;
      w.target = target;
      std::optional<double> best;
      for (const auto& r : runs) {
        w.values.push_back(first_reaching(r, target, metric));
        if (w.values.back() && (!best || *w.values.back() < *best)) best = w.values.back();
      }
      if (best) {
        for (std::size_t i = 0; i < w.values.size(); ++i) {
          if (w.values[i] && ties(metric, *w.values[i], *best)) w.winners.push_back(i);
        }
      }
      report.winners.push_back(std::move(w));
    }
  }
  report.runs = std::move(runs);
  return report;
}

ComparisonReport compare(const std::vector<ExperimentConfig>& configs) {
  require(configs.size() >= 2, "compare needs at least two configs");
  const std::string problem = canonical_problem(configs[0].problem, configs[0].seed);
  for (const auto& c : configs) {
    if (canonical_problem(c.problem, c.seed) != problem || c.seed != configs[0].seed) {
      throw ContractViolation("compare: configs must share the problem instance and seed ('" + c.name +
                              "' differs from '" + configs[0].name + "')");
    }
  }
  std::vector<RunOutput> runs;
  for (const auto& c : configs) runs.push_back(run_experiment(c));
  return compare_runs(std::move(runs));
}

std::string ComparisonReport::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["runs"] = json::array();
  for (const auto& r : runs) {
    json run;
    run["name"] = r.config.name;
    run["method"] = r.config.method;
    run["policy"] = r.config.policy.to_string();
    run["status"] = to_string(r.run.status);
    run["iterations"] = r.run.trace.empty() ? 0 : r.run.trace.back().k;
    run["hessian_vec"] = r.run.counters.hessian_vec;
    run["wall_time_s"] = r.wall_time_s;
    json series = json::array();
    for (const auto& t : r.run.trace) {
      series.push_back({{"k", t.k}, {"gap", optional_json(t.gap)}, {"hvp", t.hvp_count}, {"time_s", t.time_s}});
    }
    run["series"] = std::move(series);
    j["runs"].push_back(std::move(run));
  }
  j["winners"] = json::array();
  for (const auto& w : winners) {
    json names = json::array();
    for (auto i : w.winners) names.push_back(this->names[i]);
    json values = json::array();
    for (const auto& v : w.values) values.push_back(optional_json(v));
    j["winners"].push_back({{"metric", w.metric}, {"target", w.target}, {"values", values}, {"winners", names}});
  }
  return j.dump(2) + "\n";
}

std::string ComparisonReport::table() const {
  std::ostringstream os;
  long k_max = 0;
  for (const auto& r : runs) {
    if (!r.run.trace.empty()) k_max = std::max(k_max, r.run.trace.back().k);
  }
  os << std::setw(6) << "k";
  for (const auto& n : names) os << "  " << std::setw(14) << n.substr(0, 14);
  os << '\n';
  for (long k = 0; k <= k_max; ++k) {
    os << std::setw(6) << k;
    for (const auto& r : runs) {
      std::string text = "-";
      for (const auto& t : r.run.trace) {
        if (t.k == k) {
          std::ostringstream v;
          v << std::scientific << std::setprecision(3);
          if (t.gap) {
            v << *t.gap;
          } else {
            v << t.objective;
          }
          text = v.str();
          break;
        }
      }
      os << "  " << std::setw(14) << text;
    }
    os << '\n';
  }
  os << '\n';
  for (const auto& w : winners) {
    os << std::setw(10) << w.metric << " @ " << std::scientific << std::setprecision(0) << w.target << ": ";
    if (w.winners.empty()) {
      os << "no run reached the target";
    } else {
      for (std::size_t i = 0; i < w.winners.size(); ++i) os << (i ? ", " : "") << names[w.winners[i]];
      if (w.winners.size() > 1) os << " (tie)";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace itm

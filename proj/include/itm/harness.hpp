#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "itm/accel.hpp"
#include "itm/methods.hpp"

namespace itm {

inline constexpr int kSchemaVersion = 1;

struct CompositeSpec {
  std::string kind = "power_norm";  // power_norm | quadratic
  double mu = 1.0;
  double q = 3.0;
};

struct ProblemSpec {
  std::string kind = "logsumexp";  // logsumexp | logistic | powered_chain
  long n = 100;
  long m = 600;
  double mu = 0.05;   // log-sum-exp smoothing
  double l2 = 1e-2;   // logistic regularization
  double q = 3.0;     // chain power
  double c = 2.0;     // chain coupling
  std::string data;   // LIBSVM file for logistic; empty means synthetic
  std::optional<std::uint64_t> seed;  // falls back to the experiment seed
  std::optional<CompositeSpec> composite;

  /// Fills n, m, ... with the defaults of `kind`.
  static ProblemSpec defaults(const std::string& kind);
};

struct ExperimentConfig {
  std::string name = "run";
  ProblemSpec problem;
  std::string method = "monotone1";  // monotone1 | monotone2 | averaging | accelerated
  int order = 2;
  HMode h = HMode::from_lipschitz();
  AccuracyPolicy policy = AccuracyPolicy::power_law(1.0, 3.0);
  std::optional<AccuracyPolicy> zeta;                              // accelerated outer accuracy
  AccuracyPolicy inner_policy = AccuracyPolicy::power_law(1.0, 1.0);  // accelerated inner accuracy
  SubsolverConfig subsolver;
  long max_iterations = 100;
  long inner_max_iterations = 500;
  std::optional<double> target_gap;
  std::optional<double> gradient_tolerance;
  std::optional<double> wall_time_budget;
  double accuracy_floor = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  /// "auto", "zeros", "ones", "constant:<v>", "random:<r>" (seeded direction at
  /// primal distance r from the origin), or explicit values. "auto" picks
  /// random:1 for log-sum-exp, ones for the chain and zeros for logistic.
  std::string x0 = "auto";
  std::vector<double> x0_values;
  /// Writes time_s into the trace; off keeps traces byte-identical across runs.
  bool record_wall_time = false;
  /// Known F*; "auto" (fstar_auto) requests a cached reference run when the problem has none.
  std::optional<double> fstar;
  bool fstar_auto = true;
  std::string cache_dir = ".itm_cache";
};

/// JSON text <-> config. Syntax errors raise ParseError; unknown keys, wrong
/// types and bad values raise ContractViolation.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Applies a CLI-style override (`problem`, `method`, `p`, `H`, `policy`,
/// `subsolver`, `stop`, `max-iters`, `target-gap`, `seed`, `out`).
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

ProblemInstance build_problem(const ProblemSpec& spec, std::uint64_t seed);
/// Compact JSON of the problem with its seed resolved; equal strings mean equal instances.
std::string canonical_problem(const ProblemSpec& spec, std::uint64_t seed);
Vector resolve_x0(const ExperimentConfig& config, const ProblemInstance& problem);

struct RateFit {
  long k_lo = 0;
  long k_hi = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit
  bool truncated = false;
  std::string note;
  std::string fstar_source;
  std::vector<double> superlinear_ratios;  // (F_{k+1}-F*)/(F_{k-1}-F*)^{(p+1)/2} over the window
};

/// Least-squares slope of log(F_k - F*) against log k on [k_lo, k_hi].
/// The window is cut where the gap reaches the rounding plateau. Throws
/// ContractViolation when fewer than two usable points remain.
RateFit fit_rate(const std::vector<TraceRecord>& trace, double fstar, long k_lo, long k_hi, int order = 2);

std::string rate_fit_json(const RateFit& fit);

struct RunOutput {
  ExperimentConfig config;
  SolverRun run;
  std::optional<double> fstar;
  std::string fstar_source;  // known | config | reference-run | none
  std::optional<RateFit> fit;
  double wall_time_s = 0.0;
};

/// Builds the problem, resolves F*, runs the method. No files are written.
RunOutput execute(const ExperimentConfig& config);

/// execute() plus trace.csv, config.json and summary.json in config.out (when set).
RunOutput run_experiment(const ExperimentConfig& config);

/// CSV in the fixed column order; empty cells for absent values.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool record_wall_time);
std::string trace_csv(const std::vector<TraceRecord>& trace, bool record_wall_time);
std::vector<TraceRecord> read_trace_csv(std::istream& in);
std::vector<TraceRecord> read_trace_csv(const std::string& path);

std::string summary_json(const RunOutput& output);

/// Cached reference optimum: monotone2, adaptive exponent 2, exact subsolver,
/// ten times the iteration budget. Keyed by a hash of the problem description.
double reference_fstar(const ProblemSpec& spec, std::uint64_t seed, long max_iterations, const std::string& cache_dir);
std::uint64_t fnv1a(const std::string& bytes);

struct MetricWinner {
  std::string metric;  // iterations | hvp | time
  double target = 0.0;
  std::vector<std::optional<double>> values;  // per run, empty if never reached
  std::vector<std::size_t> winners;           // indices; several means a tie
};

struct ComparisonReport {
  std::vector<std::string> names;
  std::vector<RunOutput> runs;
  std::vector<MetricWinner> winners;

  std::string to_json() const;
  /// Aligned gap-vs-iteration table followed by the per-target winners.
  std::string table() const;
};

/// Runs every config (writing outputs when `out` is set) and compares them.
/// Throws ContractViolation when the problems or seeds differ.
ComparisonReport compare(const std::vector<ExperimentConfig>& configs);
/// Compares finished runs without re-running.
ComparisonReport compare_runs(std::vector<RunOutput> runs);

inline const std::vector<double>& comparison_targets() {
  static const std::vector<double> targets{1e-4, 1e-6, 1e-8};
  return targets;
}

}  // namespace itm

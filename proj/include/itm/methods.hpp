#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "itm/model.hpp"
#include "itm/policies.hpp"
#include "itm/subsolvers.hpp"

namespace itm {

/// How the regularization parameter H is chosen.
struct HMode {
  enum class Kind { fixed, from_lipschitz, line_search };
  Kind kind = Kind::from_lipschitz;
  double value = 1.0;  // H for fixed, H_0 for line_search

  static HMode fixed(double h) { return {Kind::fixed, h}; }
  static HMode from_lipschitz() { return {Kind::from_lipschitz, 0.0}; }
  static HMode line_search(double h0) { return {Kind::line_search, h0}; }
  /// `fixed:<v>`, `lipschitz`, `linesearch:<v>`.
  static HMode parse(const std::string& spec);
  std::string to_string() const;
};

struct SolverConfig {
  int order = 2;
  HMode h;
  AccuracyPolicy policy = AccuracyPolicy::power_law(1.0, 3.0);
  SubsolverConfig subsolver;
  long max_iterations = 100;
  /// Stop once F(x_k) - F* <= target (needs F*).
  std::optional<double> target_gap;
  /// Stop once ||grad F(x_k)||_* <= tolerance.
  std::optional<double> gradient_tolerance;
  /// F* for gap reporting when the problem has no known optimum.
  std::optional<double> reference_value;
  /// Lower limit on requested accuracies; 0 selects 1e-14 max(1, |F(x_0)|).
  double accuracy_floor = 0.0;
  Vector x0;
  bool keep_iterates = false;
  /// Extra stopping hook, evaluated at x_k for k >= 1 with grad F(x_k).
  std::function<bool(const Vector&, const Vector&)> stop_when;
};

/// One row of a run trace. Quantities a method does not produce stay empty.
struct TraceRecord {
  long k = 0;
  double objective = 0.0;
  std::optional<double> gap;
  std::optional<double> delta_requested;
  std::optional<double> delta_certified;
  std::optional<double> h_used;
  long inner_iterations = 0;
  std::uint64_t hvp_count = 0;
  std::uint64_t grad_count = 0;
  double time_s = 0.0;
  /// ||grad F||_* at the point the step was taken from (empty at the last row).
  std::optional<double> gradient_norm;
  bool accepted = true;
};

enum class RunStatus {
  max_iterations,
  target_reached,
  gradient_tolerance,
  stop_condition,
  monotone_floor,
  subsolver_stall,
  diverged,
};

std::string to_string(RunStatus status);

struct SolverRun {
  std::vector<TraceRecord> trace;
  std::vector<Vector> iterates;  // filled when keep_iterates
  Vector x;
  double objective = 0.0;
  RunStatus status = RunStatus::max_iterations;
  std::string message;
  OracleCounters counters;
  /// max_j ||x_j - x_ref|| over the run, x_ref = x* when known, else the best
  /// iterate. An observable lower estimate of the level-set radius.
  double radius_proxy = 0.0;
  std::vector<std::string> warnings;

  long accepted_steps() const;
};

/// Inexact step from x_k, accepted only on strict decrease;
/// a rejected point warm-starts the next solve with halved accuracy.
SolverRun monotone_method_I(const ProblemInstance& problem, const SolverConfig& config);

/// Every step is a monotone inexact step.
SolverRun monotone_method_II(const ProblemInstance& problem, const SolverConfig& config);

/// Step from y_k = lambda_k x_k + (1 - lambda_k) x_0, lambda_k = (k/(k+1))^{p+1}.
SolverRun averaging_method(const ProblemInstance& problem, const SolverConfig& config);

double averaging_weight(long k, int order);

struct LineSearchResult {
  MonotoneStep step;
  double h_used = 0.0;
  int doublings = 0;
  long inner_iterations = 0;  // summed over all trials
};

/// Doubles H from h0 until F(T) <= Omega_H(x; T). `step` computes the step for
/// a given model. Throws NumericalError once H exceeds 2^60 h0.
LineSearchResult line_search_H(const TensorModel& model, double h0,
                               const std::function<MonotoneStep(const TensorModel&)>& step);

/// Convenience form: plain inexact delta-steps from x.
LineSearchResult line_search_H(const ProblemInstance& problem, const Vector& x, int order, double delta, double h0,
                               const SubsolverConfig& subsolver);

}  // namespace itm

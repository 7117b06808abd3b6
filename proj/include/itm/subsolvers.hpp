#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "itm/model.hpp"

namespace itm {

enum class Certification { bound, exact_oracle, closed_form };

/// An inexact delta-step T with Omega_H(x; T) - min Omega_H(x; .) <= certified_residual.
struct StepResult {
  Vector point;
  double certified_residual = 0.0;
  long inner_iterations = 0;
  Certification certification = Certification::closed_form;
  double model_value = 0.0;
};

/// Upper bound on g(y) - min g for g uniformly convex of degree q with modulus sigma:
/// ((q-1)/q) sigma^{-1/(q-1)} ||grad g(y)||_*^{q/(q-1)}.
double residual_bound(double gradient_dual_norm, double sigma, int q);

/// The bound above for the model itself (q = p+1, sigma = model.uniform_convexity()).
double residual_bound(const TensorModel& model, const Vector& y);

/// Global minimizer of a p = 2 model with quadratic composite via the secular
/// equation in B-whitened eigen-coordinates. Needs the dense Hessian.
StepResult exact_cubic_step(const TensorModel& model);

/// Closed-form minimizer of a p = 1 model with quadratic composite.
StepResult composite_gradient_step(const TensorModel& model);

enum class StopRule { bound, exact };

struct FgmOptions {
  StopRule stop = StopRule::bound;
  std::optional<Vector> warm_start;
  /// min Omega for StopRule::exact; computed with the exact solver when absent.
  std::optional<double> exact_minimum;
  /// 0 selects 10000 * ceil(log(1/delta)).
  long max_iterations = 0;
  /// Iterations without improvement of the best value before declaring a stall.
  long stagnation_limit = 1000;
  double initial_lipschitz = 1.0;
};

/// Raised when the first-order subsolver cannot certify the requested accuracy.
class SubsolverStall : public std::runtime_error {
 public:
  SubsolverStall(const std::string& what, StepResult best) : std::runtime_error(what), best_(std::move(best)) {}
  const StepResult& best() const noexcept { return best_; }

 private:
  StepResult best_;
};

/// Accelerated gradient method on y -> Omega_H(x; y) in the B-geometry, with
/// backtracking on the gradient Lipschitz estimate and momentum restart on
/// function increase. Returns the first iterate whose stopping rule holds.
StepResult fgm_inexact_step(const TensorModel& model, double delta, const FgmOptions& options = {});

struct SubsolverConfig {
  enum class Kind { exact, fgm };
  Kind kind = Kind::exact;
  StopRule stop = StopRule::bound;

  bool needs_dense_hessian() const { return kind == Kind::exact || stop == StopRule::exact; }
};

/// Dispatches to the closed-form, exact cubic, or FGM solver.
StepResult inexact_step(const TensorModel& model, double delta, const SubsolverConfig& config,
                        const std::optional<Vector>& warm_start = std::nullopt);

struct MonotoneStep {
  StepResult step;
  double objective = 0.0;       // F(step.point)
  double effective_delta = 0.0;
  bool stationary = false;      // refinement hit the floor without decrease
};

/// Inexact step that also decreases F: refines (halving delta, warm-started)
/// until F(T) < F(x) or delta drops below `floor`.
MonotoneStep monotone_step(const ProblemInstance& problem, const TensorModel& model, double delta, double floor,
                           const SubsolverConfig& config, const std::optional<Vector>& warm_start = std::nullopt);

}  // namespace itm

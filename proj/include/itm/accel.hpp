#pragma once

#include <optional>

#include "itm/methods.hpp"

namespace itm {

/// State of the contracting proximal scheme.
struct ProxState {
  Vector anchor;  // x_0
  Vector x;       // x_k
  Vector v;       // v_k
  double big_a = 0.0;  // A_k
  double small_a = 0.0;  // a_k = A_k - A_{k-1}
  long k = 0;
  int order = 2;
  double lipschitz = 1.0;

  static ProxState start(Vector x0, int order, double lipschitz);
  /// A_k = k^{p+1} / L_p
  static double schedule(long k, int order, double lipschitz);
};

/// d(x) = ||x - x_0||^{p+1} / (p+1)
double power_prox(const NormOperator& norm, const Vector& anchor, int order, const Vector& x);
Vector power_prox_gradient(const NormOperator& norm, const Vector& anchor, int order, const Vector& x);

/// d(x) - d(v) - <grad d(v), x - v>
double bregman(const NormOperator& norm, const Vector& anchor, int order, const Vector& v, const Vector& x);
Vector bregman_gradient(const NormOperator& norm, const Vector& anchor, int order, const Vector& v, const Vector& x);

/// beta_d(v; .) written as a composite: power norm + linear term + constant.
Composite bregman_composite(const NormOperator& norm, const Vector& anchor, int order, const Vector& v);

/// g(x) = A f((a x + A_prev x_prev) / A).
class ContractedOracle final : public SmoothOracle {
 public:
  ContractedOracle(std::shared_ptr<const SmoothOracle> base, Vector x_prev, double big_a_prev, double small_a);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& h) const override;
  Matrix hessian(const Vector& x) const override;

  /// (a x + A_prev x_prev) / A
  Vector contract(const Vector& x) const;
  double contraction() const noexcept { return small_a_ / big_a_; }

 private:
  std::shared_ptr<const SmoothOracle> base_;
  Vector x_prev_;
  double big_a_prev_;
  double small_a_;
  double big_a_;
};

/// h_{k+1} = g + a psi + beta_d(v_k; .), with g the contracted smooth part.
struct ContractedSubproblem {
  ProblemInstance instance;
  std::shared_ptr<const ContractedOracle> contracted;
  long k = 0;
  int order = 2;
  /// a^{p+1} / A^p L_p(f)
  double lipschitz_g = 0.0;
  /// 2^{1-p}, the uniform convexity of beta_d.
  double sigma = 1.0;
};

/// Subproblem for the step k -> k+1; `state.k` is k. Uses state.lipschitz for the schedule.
ContractedSubproblem build_subproblem(const ProxState& state, const ProblemInstance& base);

/// ((q-1)/q) sigma^{-1/(q-1)} ||grad h(y)||_*^{q/(q-1)} with q = p+1, sigma = 2^{1-p}.
double subproblem_residual_certificate(const ContractedSubproblem& sub, const Vector& y);
double subproblem_residual_certificate(const ContractedSubproblem& sub, const Vector& y, const Vector& grad_h);

struct AccelConfig {
  int order = 2;
  /// Overrides the problem's L_p for the A_k schedule.
  std::optional<double> lipschitz;
  /// zeta_k; empty selects power(1, p+2).
  std::optional<AccuracyPolicy> zeta;
  AccuracyPolicy inner_policy = AccuracyPolicy::power_law(1.0, 1.0);
  SubsolverConfig inner_subsolver{SubsolverConfig::Kind::fgm, StopRule::bound};
  long max_iterations = 100;
  long inner_max_iterations = 500;
  std::optional<double> target_gap;
  std::optional<double> reference_value;
  Vector x0;
  bool keep_iterates = false;
  /// Checked before each outer step (budget hooks).
  std::function<bool()> should_stop;
};

/// Outer trace rows: delta_requested is zeta_k, delta_certified the certificate at v_k,
/// h_used the inner H, inner_iterations the number of inner monotone steps.
SolverRun accelerated_method(const ProblemInstance& problem, const AccelConfig& config);

}  // namespace itm

#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "itm/linalg.hpp"
#include "itm/problems.hpp"

namespace itm {

/// Regularized Taylor model of order p in {1, 2} frozen at a center x:
///
///   Omega_H(x; y) = f(x) + <g, r> [+ 1/2 <A r, r>] + H ||r||^{p+1} / (p+1)! + psi(y),  r = y - x.
///
/// For p = 2 the curvature A is either a stored dense Hessian or the oracle's
/// Hessian-vector product at the center.
class TensorModel {
 public:
  struct Evaluation {
    double value;
    Vector gradient;
  };

  /// Evaluates f, its gradient, and (if `dense_hessian`) the Hessian at the center.
  static TensorModel freeze(const ProblemInstance& problem, Vector center, int order, double regularization,
                            bool dense_hessian);

  /// Same center data with a different H; no oracle calls.
  TensorModel with_regularization(double regularization) const;

  int order() const noexcept { return order_; }
  double regularization() const noexcept { return h_; }
  const Vector& center() const noexcept { return center_; }
  double smooth_value_at_center() const noexcept { return f_center_; }
  const Vector& smooth_gradient_at_center() const noexcept { return g_center_; }
  /// F(x) = f(x) + psi(x)
  double objective_at_center() const noexcept { return f_center_ + psi_center_; }
  const Composite& composite() const noexcept { return *composite_; }
  const NormOperator& norm() const noexcept { return norm_; }
  bool has_dense_hessian() const noexcept { return hessian_.has_value(); }
  const Matrix& dense_hessian() const;
  Eigen::Index dimension() const noexcept { return center_.size(); }

  /// A r (zero for p = 1). One Hessian-vector product unless the Hessian is stored.
  Vector curvature(const Vector& step) const;

  double value(const Vector& y) const;
  Vector gradient(const Vector& y) const;
  /// Value and gradient sharing one curvature product.
  Evaluation evaluate(const Vector& y) const;
  /// Same as evaluate() with a precomputed A (y - x); curvature is linear so
  /// callers can combine cached products instead of recomputing.
  Evaluation evaluate_with_curvature(const Vector& y, const Vector& curvature_of_step) const;

  /// Modulus of uniform convexity of degree p+1 of the whole model: the
  /// regularizer contributes H 2^{1-p} / p! and power-norm composites add theirs.
  double uniform_convexity() const;
  /// H 2^{1-p} / p!, the regularizer's share alone.
  double regularizer_uniform_convexity() const;

 private:
  TensorModel() = default;

  int order_ = 2;
  double h_ = 1.0;
  Vector center_;
  double f_center_ = 0.0;
  double psi_center_ = 0.0;
  Vector g_center_;
  std::optional<Matrix> hessian_;
  std::shared_ptr<const SmoothOracle> oracle_;
  std::shared_ptr<const Composite> composite_;
  NormOperator norm_ = NormOperator::identity(1);
};

double factorial(int p);

struct UpperBoundReport {
  int samples = 0;
  int violations = 0;             // F(y) > Omega_H(x; y) + tolerance
  int taylor_violations = 0;      // |f(y) - f_{p,x}(y)| > L_p ||y-x||^{p+1}/(p+1)! + tolerance
  double max_excess = -1e300;     // max of F(y) - Omega_H(x; y)
  double max_taylor_excess = -1e300;
  bool passed() const { return violations == 0 && taylor_violations == 0; }
};

/// Samples y uniformly in the primal-norm ball of `radius` around the center
/// and checks the global upper bound. Requires L_p known for the problem.
UpperBoundReport model_upper_bound_check(const TensorModel& model, const ProblemInstance& problem, int samples,
                                         double radius, std::uint64_t seed, double tolerance = 1e-10);

}  // namespace itm

#include "itm/model.hpp"

#include <cmath>

#include "itm/errors.hpp"
#include "itm/random.hpp"

namespace itm {

double factorial(int p) {
  double out = 1.0;
  for (int i = 2; i <= p; ++i) out *= i;
  return out;
}

TensorModel TensorModel::freeze(const ProblemInstance& problem, Vector center, int order, double regularization,
                                bool dense_hessian) {
  require(order == 1 || order == 2, "tensor model order must be 1 or 2");
  require(regularization > 0.0 && std::isfinite(regularization), "regularization H must be positive");
  require(center.size() == problem.dimension(), "model center dimension mismatch");
  TensorModel m;
  m.order_ = order;
  m.h_ = regularization;
  m.oracle_ = problem.smooth;
  m.composite_ = std::make_shared<const Composite>(problem.composite);
  m.norm_ = problem.norm();
  m.f_center_ = problem.smooth->value(center);
  m.g_center_ = problem.smooth->gradient(center);
  m.psi_center_ = problem.composite.value(center);
  if (order == 2 && dense_hessian) m.hessian_ = problem.smooth->hessian(center);
  m.center_ = std::move(center);
  return m;
}

TensorModel TensorModel::with_regularization(double regularization) const {
  require(regularization > 0.0 && std::isfinite(regularization), "regularization H must be positive");
  TensorModel m = *this;
  m.h_ = regularization;
  return m;
}

const Matrix& TensorModel::dense_hessian() const {
  require(hessian_.has_value(), "model was frozen without a dense Hessian");
  return *hessian_;
}

Vector TensorModel::curvature(const Vector& step) const {
  if (order_ == 1) return Vector::Zero(step.size());
  if (hessian_) return (*hessian_) * step;
  return oracle_->hessian_vec(center_, step);
}

TensorModel::Evaluation TensorModel::evaluate_with_curvature(const Vector& y, const Vector& curv) const {
  require(y.size() == center_.size(), "model point dimension mismatch");
  const Vector r = y - center_;
  const Vector br = norm_.apply(r);
  const double rho = std::sqrt(std::max(0.0, br.dot(r)));
  const double reg = h_ * std::pow(rho, order_ + 1) / factorial(order_ + 1);

  Evaluation out;
  out.value = f_center_ + g_center_.dot(r) + reg + composite_->value(y);
  out.gradient = g_center_ + (h_ / factorial(order_)) * std::pow(rho, order_ - 1) * br;
  if (order_ == 2) {
    out.value += 0.5 * curv.dot(r);
    out.gradient += curv;
  }
  if (!composite_->is_zero()) out.gradient += composite_->gradient(y);
  return out;
}

TensorModel::Evaluation TensorModel::evaluate(const Vector& y) const {
  return evaluate_with_curvature(y, curvature(y - center_));
}

double TensorModel::value(const Vector& y) const { return evaluate(y).value; }
Vector TensorModel::gradient(const Vector& y) const { return evaluate(y).gradient; }

double TensorModel::regularizer_uniform_convexity() const {
  return h_ * std::pow(2.0, 1 - order_) / factorial(order_);
}

double TensorModel::uniform_convexity() const {
  return regularizer_uniform_convexity() + composite_->uniform_convexity(order_);
}

UpperBoundReport model_upper_bound_check(const TensorModel& model, const ProblemInstance& problem, int samples,
                                         double radius, std::uint64_t seed, double tolerance) {
  const auto lp = problem.smooth->lipschitz(model.order());
  require(lp.has_value(), "upper-bound check needs a known Lipschitz constant");
  require(samples >= 1 && radius > 0.0, "upper-bound check needs samples and a positive radius");
  Rng rng(seed);
  const Eigen::Index n = model.dimension();
  const int p = model.order();
  UpperBoundReport report;
  report.samples = samples;
  for (int s = 0; s < samples; ++s) {
    Vector dir = rng.unit_vector(n);
    dir /= model.norm().primal_norm(dir);
    const double len = radius * std::pow(rng.uniform(0.0, 1.0), 1.0 / static_cast<double>(n));
    const Vector r = len * dir;
    const Vector y = model.center() + r;
    const double omega = model.value(y);
    const double big_f = problem.objective(y);
    const double excess = big_f - omega;
    report.max_excess = std::max(report.max_excess, excess);
    if (excess > tolerance) ++report.violations;

    double taylor = model.smooth_value_at_center() + model.smooth_gradient_at_center().dot(r);
    if (p == 2) taylor += 0.5 * model.curvature(r).dot(r);
    const double bound = *lp * std::pow(len, p + 1) / factorial(p + 1);
    const double taylor_excess = std::abs(problem.smooth->value(y) - taylor) - bound;
    report.max_taylor_excess = std::max(report.max_taylor_excess, taylor_excess);
    if (taylor_excess > tolerance) ++report.taylor_violations;
  }
  return report;
}

}  // namespace itm

#include "itm/subsolvers.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "itm/errors.hpp"

namespace itm {

double residual_bound(double gradient_dual_norm, double sigma, int q) {
  require(sigma > 0.0, "uniform convexity modulus must be positive");
  require(q >= 2, "uniform convexity degree must be at least 2");
  require(gradient_dual_norm >= 0.0, "gradient norm must be nonnegative");
  const double qd = static_cast<double>(q);
  return (qd - 1.0) / qd * std::pow(sigma, -1.0 / (qd - 1.0)) * std::pow(gradient_dual_norm, qd / (qd - 1.0));
}

double residual_bound(const TensorModel& model, const Vector& y) {
  return residual_bound(model.norm().dual_norm(model.gradient(y)), model.uniform_convexity(), model.order() + 1);
}

// ---------------------------------------------------------------------------

namespace {

/// Minimizes <gamma, z> + 1/2 sum lambda_i z_i^2 + (h/6) ||z||^3.
Vector solve_secular(const Vector& lambda, const Vector& gamma, double h) {
  const Eigen::Index n = lambda.size();
  const double gamma_norm = gamma.norm();
  const double lambda_min = lambda.minCoeff();
  const double lambda_scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (gamma_norm == 0.0 && lambda_min >= 0.0) return Vector::Zero(n);

  const double r_lo = std::max(0.0, -2.0 * lambda_min / h);
  auto step_norm = [&](double r) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = lambda[i] + 0.5 * h * r;
      if (gamma[i] == 0.0) continue;
      if (denom <= 0.0) return std::numeric_limits<double>::infinity();
      s += (gamma[i] / denom) * (gamma[i] / denom);
    }
    return std::sqrt(s);
  };
  auto step_at = [&](double r) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = lambda[i] + 0.5 * h * r;
      z[i] = (gamma[i] == 0.0 || denom <= 0.0) ? 0.0 : -gamma[i] / denom;
    }
    return z;
  };

  // Hard case: gradient has no weight on the bottom eigenspace and the
  // boundary step is already short enough.
  const double bottom_tol = 1e-14 * lambda_scale;
  bool bottom_empty = lambda_min < 0.0;
  for (Eigen::Index i = 0; i < n && bottom_empty; ++i) {
    if (lambda[i] <= lambda_min + bottom_tol && std::abs(gamma[i]) > 1e-14 * std::max(1.0, gamma_norm)) {
      bottom_empty = false;
    }
  }
  if (bottom_empty) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = lambda[i] + 0.5 * h * r_lo;
      z[i] = (lambda[i] <= lambda_min + bottom_tol) ? 0.0 : -gamma[i] / denom;
    }
    const double len = z.norm();
    if (len <= r_lo) {
      Eigen::Index bottom = 0;
      lambda.minCoeff(&bottom);
      z[bottom] += std::sqrt(r_lo * r_lo - len * len);
      return z;
    }
  }

  // phi(r) = ||z(r)|| - r is decreasing on (r_lo, inf); bracket its root.
  double lo = r_lo;
  double hi = r_lo + std::max(1.0, std::sqrt(2.0 * gamma_norm / h));
  int doublings = 0;
  while (step_norm(hi) > hi) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 2000) throw NumericalError("secular equation: failed to bracket the root");
  }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    const double len = step_norm(r);
    const double phi = len - r;
    if (phi > 0.0) lo = r; else hi = r;
    if (phi == 0.0 || hi - lo <= 1e-12 * std::max(hi, std::numeric_limits<double>::min())) break;
    // Newton on phi, kept inside the bracket.
    double dlen = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = lambda[i] + 0.5 * h * r;
      dlen += gamma[i] * gamma[i] / (denom * denom * denom);
    }
    dlen *= -0.5 * h / std::max(len, std::numeric_limits<double>::min());
    double next = r - phi / (dlen - 1.0);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    r = next;
  }
  return step_at(r);
}

}  // namespace

StepResult exact_cubic_step(const TensorModel& model) {
  require(model.order() == 2, "exact cubic step needs a p = 2 model");
  require(model.composite().is_quadratic(), "exact cubic step supports only quadratic composites");
  const Vector& x = model.center();
  Vector g = model.smooth_gradient_at_center();
  Matrix a = model.dense_hessian();
  if (!model.composite().is_zero()) {
    g += model.composite().gradient(x);
    a += model.composite().hessian(x);
  }
  const NormOperator& norm = model.norm();
  const SymmetricEigen eig = sym_eigendecomposition(norm.whiten(a));
  const Vector gamma = eig.eigenvectors.transpose() * norm.solve_lower(g);
  const Vector z = solve_secular(eig.eigenvalues, gamma, model.regularization());

  StepResult out;
  out.point = x + norm.solve_lower_transpose(eig.eigenvectors * z);
  out.certified_residual = 0.0;
  out.inner_iterations = 0;
  out.certification = Certification::exact_oracle;
  out.model_value = model.value(out.point);
  return out;
}

StepResult composite_gradient_step(const TensorModel& model) {
  require(model.order() == 1, "composite gradient step needs a p = 1 model");
  require(model.composite().is_quadratic(), "composite gradient step supports only quadratic composites");
  const Vector& x = model.center();
  const NormOperator& norm = model.norm();
  Vector step;
  if (model.composite().is_zero()) {
    step = -norm.solve(model.smooth_gradient_at_center()) / model.regularization();
  } else {
    const Vector g = model.smooth_gradient_at_center() + model.composite().gradient(x);
    const Matrix system = model.regularization() * norm.to_matrix() + model.composite().hessian(x);
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) throw FactorizationError("composite gradient step: singular system");
    step = -llt.solve(g);
  }
  StepResult out;
  out.point = x + step;
  out.certified_residual = 0.0;
  out.inner_iterations = 0;
  out.certification = Certification::closed_form;
  out.model_value = model.value(out.point);
  return out;
}

// ---------------------------------------------------------------------------

StepResult fgm_inexact_step(const TensorModel& model, double delta, const FgmOptions& options) {
  require(delta > 0.0, "subsolver accuracy must be positive");
  const NormOperator& norm = model.norm();
  const Vector& center = model.center();
  const int q = model.order() + 1;
  const double sigma = model.uniform_convexity();

  double exact_min = 0.0;
  if (options.stop == StopRule::exact) {
    if (options.exact_minimum) {
      exact_min = *options.exact_minimum;
    } else {
      exact_min = (model.order() == 2 ? exact_cubic_step(model) : composite_gradient_step(model)).model_value;
    }
  }

  long cap = options.max_iterations;
  if (cap <= 0) cap = 10000L * std::max(1L, static_cast<long>(std::ceil(std::log(1.0 / delta))));

  auto certify = [&](const TensorModel::Evaluation& ev) {
    return options.stop == StopRule::exact ? std::max(0.0, ev.value - exact_min)
                                           : residual_bound(norm.dual_norm(ev.gradient), sigma, q);
  };
  auto result = [&](const Vector& point, const TensorModel::Evaluation& ev, long iterations) {
    StepResult out;
    out.point = point;
    out.certified_residual = certify(ev);
    out.inner_iterations = iterations;
    out.certification = options.stop == StopRule::exact ? Certification::exact_oracle : Certification::bound;
    out.model_value = ev.value;
    return out;
  };

  Vector x = options.warm_start ? *options.warm_start : center;
  require(x.size() == center.size(), "warm start dimension mismatch");
  Vector ax = model.curvature(x - center);
  TensorModel::Evaluation ev_x = model.evaluate_with_curvature(x, ax);
  if (certify(ev_x) <= delta) return result(x, ev_x, 0);

  Vector best = x;
  TensorModel::Evaluation ev_best = ev_x;
  long since_best = 0;

  Vector y = x;
  Vector ay = ax;
  TensorModel::Evaluation ev_y = ev_x;
  double momentum = 1.0;
  double lipschitz = options.initial_lipschitz;
  const double eps = std::numeric_limits<double>::epsilon();

  for (long it = 1; it <= cap; ++it) {
    lipschitz = std::max(lipschitz * 0.5, 1e-300);
    Vector x_new;
    Vector a_new;
    TensorModel::Evaluation ev_new;
    for (;;) {
      const Vector d = -norm.solve(ev_y.gradient) / lipschitz;
      x_new = y + d;
      a_new = ay + model.curvature(d);
      ev_new = model.evaluate_with_curvature(x_new, a_new);
      const double upper = ev_y.value + ev_y.gradient.dot(d) + 0.5 * lipschitz * norm.primal_norm(d) * norm.primal_norm(d);
      if (ev_new.value <= upper + 10.0 * eps * std::max(1.0, std::abs(ev_y.value))) break;
      lipschitz *= 2.0;
      if (!std::isfinite(lipschitz) || lipschitz > 1e300) {
        throw SubsolverStall("fgm: backtracking failed", result(best, ev_best, it));
      }
    }

    if (certify(ev_new) <= delta) return result(x_new, ev_new, it);

    if (ev_new.value < ev_best.value) {
      best = x_new;
      ev_best = ev_new;
      since_best = 0;
    } else if (++since_best > options.stagnation_limit) {
      throw SubsolverStall("fgm: no progress, accuracy below attainable precision", result(best, ev_best, it));
    }

    if (ev_new.value > ev_x.value) {
      // Function increased: drop the momentum and restart from the new point.
      momentum = 1.0;
      y = x_new;
      ay = a_new;
      ev_y = ev_new;
    } else {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / next;
      y = x_new + beta * (x_new - x);
      ay = a_new + beta * (a_new - ax);
      ev_y = model.evaluate_with_curvature(y, ay);
      momentum = next;
    }
    x = std::move(x_new);
    ax = std::move(a_new);
    ev_x = std::move(ev_new);
  }
  throw SubsolverStall("fgm: iteration cap reached", result(best, ev_best, cap));
}

// ---------------------------------------------------------------------------

StepResult inexact_step(const TensorModel& model, double delta, const SubsolverConfig& config,
                        const std::optional<Vector>& warm_start) {
  if (config.kind == SubsolverConfig::Kind::exact) {
    return model.order() == 1 ? composite_gradient_step(model) : exact_cubic_step(model);
  }
  FgmOptions options;
  options.stop = config.stop;
  options.warm_start = warm_start;
  return fgm_inexact_step(model, delta, options);
}

MonotoneStep monotone_step(const ProblemInstance& problem, const TensorModel& model, double delta, double floor,
                           const SubsolverConfig& config, const std::optional<Vector>& warm_start) {
  require(floor > 0.0, "monotone floor must be positive");
  const double start = model.objective_at_center();
  MonotoneStep out;
  out.effective_delta = std::max(delta, floor);
  std::optional<Vector> warm = warm_start;
  long inner = 0;
  for (;;) {
    try {
      out.step = inexact_step(model, out.effective_delta, config, warm);
    } catch (const SubsolverStall& stall) {
      // attainable precision reached: keep the best point if it still decreases F
      out.step = stall.best();
      out.step.inner_iterations += inner;
      out.objective = problem.objective(out.step.point);
      out.stationary = !(out.objective < start);
      return out;
    }
    inner += out.step.inner_iterations;
    out.step.inner_iterations = inner;
    out.objective = problem.objective(out.step.point);
    if (out.objective < start) return out;
    if (config.kind == SubsolverConfig::Kind::exact) {
      out.stationary = true;
      return out;
    }
    out.effective_delta *= 0.5;
    if (out.effective_delta < floor) {
      out.stationary = true;
      return out;
    }
    warm = out.step.point;
  }
}

}  // namespace itm

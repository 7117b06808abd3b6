#include "itm/accel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "itm/errors.hpp"

namespace itm {

ProxState ProxState::start(Vector x0, int order, double lipschitz) {
  require(order == 1 || order == 2, "order p must be 1 or 2");
  require(lipschitz > 0.0 && std::isfinite(lipschitz), "schedule needs L_p > 0");
  ProxState s;
  s.anchor = x0;
  s.x = x0;
  s.v = std::move(x0);
  s.order = order;
  s.lipschitz = lipschitz;
  return s;
}

double ProxState::schedule(long k, int order, double lipschitz) {
  return std::pow(static_cast<double>(k), order + 1) / lipschitz;
}

double power_prox(const NormOperator& norm, const Vector& anchor, int order, const Vector& x) {
  const double r = norm.primal_norm(x - anchor);
  return std::pow(r, order + 1) / (order + 1);
}

Vector power_prox_gradient(const NormOperator& norm, const Vector& anchor, int order, const Vector& x) {
  const Vector br = norm.apply(x - anchor);
  if (order == 1) return br;
  const double r = std::sqrt(std::max(0.0, br.dot(x - anchor)));
  return std::pow(r, order - 1) * br;
}

double bregman(const NormOperator& norm, const Vector& anchor, int order, const Vector& v, const Vector& x) {
  const double out = power_prox(norm, anchor, order, x) - power_prox(norm, anchor, order, v) -
                     power_prox_gradient(norm, anchor, order, v).dot(x - v);
  return std::max(0.0, out);
}

Vector bregman_gradient(const NormOperator& norm, const Vector& anchor, int order, const Vector& v, const Vector& x) {
  return power_prox_gradient(norm, anchor, order, x) - power_prox_gradient(norm, anchor, order, v);
}

Composite bregman_composite(const NormOperator& norm, const Vector& anchor, int order, const Vector& v) {
  const Vector gv = power_prox_gradient(norm, anchor, order, v);
  Composite out = Composite::single(CompositePart::power_norm(1.0, order + 1.0, anchor, norm));
  out.linear = -gv;
  out.constant = gv.dot(v) - power_prox(norm, anchor, order, v);
  return out;
}

ContractedOracle::ContractedOracle(std::shared_ptr<const SmoothOracle> base, Vector x_prev, double big_a_prev,
                                   double small_a)
    : SmoothOracle(base->norm(), {}),
      base_(std::move(base)),
      x_prev_(std::move(x_prev)),
      big_a_prev_(big_a_prev),
      small_a_(small_a),
      big_a_(big_a_prev + small_a) {
  require(small_a > 0.0 && big_a_prev >= 0.0, "contraction needs a > 0 and A >= 0");
}

Vector ContractedOracle::contract(const Vector& x) const {
  return (small_a_ * x + big_a_prev_ * x_prev_) / big_a_;
}

double ContractedOracle::value(const Vector& x) const { return big_a_ * base_->value(contract(x)); }

Vector ContractedOracle::gradient(const Vector& x) const { return small_a_ * base_->gradient(contract(x)); }

Vector ContractedOracle::hessian_vec(const Vector& x, const Vector& h) const {
  return (small_a_ * small_a_ / big_a_) * base_->hessian_vec(contract(x), h);
}

Matrix ContractedOracle::hessian(const Vector& x) const {
  return (small_a_ * small_a_ / big_a_) * base_->hessian(contract(x));
}

namespace {

/// SmoothOracle with constants supplied after construction.
class WithConstants final : public SmoothOracle {
 public:
  WithConstants(std::shared_ptr<const SmoothOracle> base, std::map<int, double> lipschitz)
      : SmoothOracle(base->norm(), std::move(lipschitz)), base_(std::move(base)) {}
  double value(const Vector& x) const override { return base_->value(x); }
  Vector gradient(const Vector& x) const override { return base_->gradient(x); }
  Vector hessian_vec(const Vector& x, const Vector& h) const override { return base_->hessian_vec(x, h); }
  Matrix hessian(const Vector& x) const override { return base_->hessian(x); }

 private:
  std::shared_ptr<const SmoothOracle> base_;
};

}  // namespace

ContractedSubproblem build_subproblem(const ProxState& state, const ProblemInstance& base) {
  const int p = state.order;
  const double a_next = ProxState::schedule(state.k + 1, p, state.lipschitz);
  const double small_a = a_next - state.big_a;
  require(small_a > 0.0, "schedule must be increasing");
  ContractedSubproblem sub;
  sub.k = state.k;
  sub.order = p;
  sub.contracted = std::make_shared<ContractedOracle>(base.smooth, state.x, state.big_a, small_a);
  sub.lipschitz_g = std::pow(small_a, p + 1) / std::pow(a_next, p) * state.lipschitz;
  sub.sigma = std::pow(2.0, 1 - p);
  sub.instance.smooth = std::make_shared<WithConstants>(sub.contracted, std::map<int, double>{{p, sub.lipschitz_g}});
  sub.instance.composite =
      base.composite.scaled(small_a).plus(bregman_composite(base.norm(), state.anchor, p, state.v));
  sub.instance.name = base.name + "/contracted";
  return sub;
}

double subproblem_residual_certificate(const ContractedSubproblem& sub, const Vector&, const Vector& grad_h) {
  return residual_bound(sub.instance.norm().dual_norm(grad_h), sub.sigma, sub.order + 1);
}

double subproblem_residual_certificate(const ContractedSubproblem& sub, const Vector& y) {
  return subproblem_residual_certificate(sub, y, sub.instance.objective_gradient(y));
}

SolverRun accelerated_method(const ProblemInstance& problem, const AccelConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const int p = config.order;
  require(p == 1 || p == 2, "order p must be 1 or 2");
  double lipschitz = 0.0;
  if (config.lipschitz) {
    lipschitz = *config.lipschitz;
  } else {
    const auto lp = problem.smooth->lipschitz(p);
    if (!lp) throw ContractViolation("accelerated scheme needs L_p (known or supplied)");
    lipschitz = *lp;
  }
  require(lipschitz > 0.0, "accelerated scheme needs L_p > 0");
  const AccuracyPolicy zeta = config.zeta.value_or(AccuracyPolicy::power_law(1.0, p + 2.0));

  auto counters = std::make_shared<OracleCounters>();
  ProblemInstance counted = problem;
  counted.smooth = std::make_shared<CountingOracle>(problem.smooth, counters);
  std::optional<double> fstar;
  if (problem.optimum) {
    fstar = problem.optimum->value;
  } else if (config.reference_value) {
    fstar = config.reference_value;
  }

  Vector x0 = config.x0.size() > 0 ? config.x0 : Vector::Zero(problem.dimension());
  require(x0.size() == problem.dimension(), "x0 dimension mismatch");

  SolverRun run;
  if (zeta.kind != AccuracyPolicy::Kind::power_law || zeta.alpha < p + 2) {
    run.warnings.push_back("zeta " + zeta.to_string() + " decays slower than c/k^{p+2}; the accelerated rate is not guaranteed");
  }
  std::vector<Vector> visited;
  std::vector<double> values;
  auto record = [&](long k, const Vector& x, double fx, std::optional<double> z, std::optional<double> cert,
                    std::optional<double> h, long inner) {
    TraceRecord r;
    r.k = k;
    r.objective = fx;
    if (fstar) r.gap = fx - *fstar;
    r.delta_requested = z;
    r.delta_certified = cert;
    r.h_used = h;
    r.inner_iterations = inner;
    r.hvp_count = counters->hessian_vec;
    r.grad_count = counters->gradient;
    r.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.trace.push_back(r);
    visited.push_back(x);
    values.push_back(fx);
  };

  ProxState state = ProxState::start(x0, p, lipschitz);
  double fx = counted.objective(state.x);
  record(0, state.x, fx, std::nullopt, std::nullopt, std::nullopt, 0);
  std::vector<double> history{fx};

  auto reached = [&](double f) {
    if (!std::isfinite(f)) {
      run.status = RunStatus::diverged;
      run.message = "objective is not finite";
      return true;
    }
    if (config.target_gap && fstar && f - *fstar <= *config.target_gap) {
      run.status = RunStatus::target_reached;
      return true;
    }
    return false;
  };

  if (!reached(fx)) {
    for (long k = 0; k < config.max_iterations; ++k) {
      if (config.should_stop && config.should_stop()) {
        run.status = RunStatus::stop_condition;
        break;
      }
      const ContractedSubproblem sub = build_subproblem(state, counted);
      const double z = zeta.next_delta(k + 1, history);

      SolverConfig inner;
      inner.order = p;
      inner.h = HMode::from_lipschitz();
      inner.policy = config.inner_policy;
      inner.subsolver = config.inner_subsolver;
      inner.max_iterations = config.inner_max_iterations;
      inner.x0 = state.v;
      inner.stop_when = [&](const Vector& y, const Vector& grad) {
        return subproblem_residual_certificate(sub, y, grad) <= z;
      };
      const SolverRun inner_run = monotone_method_II(sub.instance, inner);
      if (inner_run.status == RunStatus::subsolver_stall || inner_run.status == RunStatus::diverged) {
        run.status = inner_run.status;
        run.message = "inner solve at k = " + std::to_string(k + 1) + ": " + inner_run.message;
        break;
      }
      const Vector& v_next = inner_run.x;
      const double cert = inner_run.trace.back().gradient_norm
                              ? residual_bound(*inner_run.trace.back().gradient_norm, sub.sigma, p + 1)
                              : subproblem_residual_certificate(sub, v_next);

      const double a_next = ProxState::schedule(k + 1, p, lipschitz);
      const double small_a = a_next - state.big_a;
      state.x = (small_a * v_next + state.big_a * state.x) / a_next;
      state.v = v_next;
      state.big_a = a_next;
      state.small_a = small_a;
      state.k = k + 1;

      fx = counted.objective(state.x);
      history.push_back(std::min(history.back(), fx));
      record(k + 1, state.x, fx, z, cert, p * sub.lipschitz_g, inner_run.accepted_steps());
      if (reached(fx)) break;
    }
  }

  run.x = state.x;
  run.objective = fx;
  run.counters = *counters;
  Vector ref;
  if (problem.optimum) {
    ref = problem.optimum->x;
  } else {
    ref = visited[static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin())];
  }
  for (const auto& v : visited) run.radius_proxy = std::max(run.radius_proxy, problem.norm().primal_norm(v - ref));
  if (config.keep_iterates) run.iterates = std::move(visited);
  return run;
}

}  // namespace itm

#include "itm/methods.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "itm/errors.hpp"

namespace itm {

HMode HMode::parse(const std::string& spec) {
  auto value_of = [&](const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || token.empty() || !(v > 0.0) || !std::isfinite(v)) {
      throw ContractViolation("bad H value in '" + spec + "'");
    }
    return v;
  };
  if (spec == "lipschitz") return from_lipschitz();
  if (spec.rfind("fixed:", 0) == 0) return fixed(value_of(spec.substr(6)));
  if (spec.rfind("linesearch:", 0) == 0) return line_search(value_of(spec.substr(11)));
  throw ContractViolation("unknown H mode '" + spec + "' (expected fixed:V, lipschitz, linesearch:V)");
}

std::string HMode::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::fixed:
      os << "fixed:" << value;
      break;
    case Kind::from_lipschitz:
      os << "lipschitz";
      break;
    case Kind::line_search:
      os << "linesearch:" << value;
      break;
  }
  return os.str();
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::max_iterations:
      return "max_iterations";
    case RunStatus::target_reached:
      return "target_reached";
    case RunStatus::gradient_tolerance:
      return "gradient_tolerance";
    case RunStatus::stop_condition:
      return "stop_condition";
    case RunStatus::monotone_floor:
      return "monotone_floor";
    case RunStatus::subsolver_stall:
      return "subsolver_stall";
    case RunStatus::diverged:
      return "diverged";
  }
  return "unknown";
}

long SolverRun::accepted_steps() const {
  long n = 0;
  for (const auto& r : trace) {
    if (r.k > 0 && r.accepted) ++n;
  }
  return n;
}

double averaging_weight(long k, int order) {
  require(k >= 0, "averaging index must be nonnegative");
  const double t = static_cast<double>(k) / static_cast<double>(k + 1);
  return std::pow(t, order + 1);
}

LineSearchResult line_search_H(const TensorModel& model, double h0,
                               const std::function<MonotoneStep(const TensorModel&)>& step) {
  require(h0 > 0.0 && std::isfinite(h0), "line search needs H0 > 0");
  const double limit = std::ldexp(h0, 60);
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(model.objective_at_center()));
  LineSearchResult out;
  double h = h0;
  for (;;) {
    const TensorModel trial = model.with_regularization(h);
    out.step = step(trial);
    out.inner_iterations += out.step.step.inner_iterations;
    const double omega = trial.value(out.step.step.point);
    if (out.step.objective <= omega + slack) {
      out.h_used = h;
      out.step.step.inner_iterations = out.inner_iterations;
      return out;
    }
    h *= 2.0;
    ++out.doublings;
    if (h > limit) throw NumericalError("H line search diverged: H exceeds 2^60 H0");
  }
}

LineSearchResult line_search_H(const ProblemInstance& problem, const Vector& x, int order, double delta, double h0,
                               const SubsolverConfig& subsolver) {
  const bool dense = order == 2 && subsolver.needs_dense_hessian();
  const TensorModel model = TensorModel::freeze(problem, x, order, h0, dense);
  return line_search_H(model, h0, [&](const TensorModel& m) {
    MonotoneStep s;
    s.step = inexact_step(m, delta, subsolver);
    s.objective = problem.objective(s.step.point);
    s.effective_delta = delta;
    return s;
  });
}

namespace {

enum class Variant { monotone_one, monotone_two, averaging };

class Session {
 public:
  Session(const ProblemInstance& problem, const SolverConfig& config)
      : config_(config), counters_(std::make_shared<OracleCounters>()), start_(std::chrono::steady_clock::now()) {
    require(config.order == 1 || config.order == 2, "order p must be 1 or 2");
    require(config.max_iterations >= 0, "max_iterations must be nonnegative");
    counted_ = problem;
    counted_.smooth = std::make_shared<CountingOracle>(problem.smooth, counters_);
    if (problem.optimum) {
      fstar_ = problem.optimum->value;
    } else if (config.reference_value) {
      fstar_ = config.reference_value;
    }
    switch (config.h.kind) {
      case HMode::Kind::fixed:
        require(config.h.value > 0.0, "fixed H must be positive");
        h_ = config.h.value;
        break;
      case HMode::Kind::from_lipschitz: {
        const auto lp = problem.smooth->lipschitz(config.order);
        if (!lp || !(*lp > 0.0)) throw ContractViolation("H = pL_p needs a known positive L_p for this problem");
        h_ = config.order * *lp;
        break;
      }
      case HMode::Kind::line_search:
        require(config.h.value > 0.0, "line-search H0 must be positive");
        h_ = config.h.value;
        break;
    }
    run_.warnings = config.policy.validity_warnings(config.order);
    dense_ = config.order == 2 && config.subsolver.needs_dense_hessian();
  }

  const ProblemInstance& problem() const { return counted_; }
  const SolverConfig& config() const { return config_; }
  SolverRun& run() { return run_; }
  bool dense() const { return dense_; }

  double floor_for(double f0) {
    floor_ = config_.accuracy_floor > 0.0 ? config_.accuracy_floor : 1e-14 * std::max(1.0, std::abs(f0));
    return floor_;
  }
  double floor() const { return floor_; }

  TensorModel freeze(const Vector& center) {
    return TensorModel::freeze(counted_, center, config_.order, h_, dense_);
  }

  /// Takes one step from `model`; applies the H line search when configured.
  /// Returns the H that produced the step.
  template <class StepFn>
  MonotoneStep step(const TensorModel& model, StepFn&& fn, double& h_used) {
    if (config_.h.kind != HMode::Kind::line_search) {
      h_used = h_;
      return fn(model);
    }
    const LineSearchResult ls = line_search_H(model, h_, std::function<MonotoneStep(const TensorModel&)>(fn));
    h_used = ls.h_used;
    h_ = ls.h_used / 2.0;
    return ls.step;
  }

  void record(long k, const Vector& x, double objective, std::optional<double> delta_req,
              std::optional<double> delta_cert, std::optional<double> h_used, long inner, bool accepted) {
    TraceRecord r;
    r.k = k;
    r.objective = objective;
    if (fstar_) r.gap = objective - *fstar_;
    r.delta_requested = delta_req;
    r.delta_certified = delta_cert;
    r.h_used = h_used;
    r.inner_iterations = inner;
    r.hvp_count = counters_->hessian_vec;
    r.grad_count = counters_->gradient;
    r.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    r.accepted = accepted;
    run_.trace.push_back(r);
    visited_.push_back(x);
    visited_values_.push_back(objective);
  }

  /// Called with the gradient of F at the latest recorded point.
  bool check_gradient_stops(const Vector& x, const Vector& grad_f) {
    const double gn = counted_.norm().dual_norm(grad_f);
    run_.trace.back().gradient_norm = gn;
    if (config_.gradient_tolerance && gn <= *config_.gradient_tolerance) {
      run_.status = RunStatus::gradient_tolerance;
      return true;
    }
    if (config_.stop_when && run_.trace.back().k >= 1 && config_.stop_when(x, grad_f)) {
      run_.status = RunStatus::stop_condition;
      return true;
    }
    return false;
  }

  bool check_value_stops(double objective) {
    if (!std::isfinite(objective)) {
      run_.status = RunStatus::diverged;
      run_.message = "objective is not finite";
      return true;
    }
    if (config_.target_gap && fstar_ && objective - *fstar_ <= *config_.target_gap) {
      run_.status = RunStatus::target_reached;
      return true;
    }
    return false;
  }

  SolverRun finish(const Vector& x, double objective) {
    run_.x = x;
    run_.objective = objective;
    run_.counters = *counters_;
    Vector ref;
    if (counted_.optimum) {
      ref = counted_.optimum->x;
    } else {
      const auto best = std::min_element(visited_values_.begin(), visited_values_.end()) - visited_values_.begin();
      ref = visited_[static_cast<std::size_t>(best)];
    }
    double radius = 0.0;
    for (const auto& v : visited_) radius = std::max(radius, counted_.norm().primal_norm(v - ref));
    run_.radius_proxy = radius;
    if (config_.keep_iterates) run_.iterates = visited_;
    return std::move(run_);
  }

 private:
  SolverConfig config_;
  std::shared_ptr<OracleCounters> counters_;
  ProblemInstance counted_;
  std::optional<double> fstar_;
  double h_ = 1.0;
  bool dense_ = false;
  double floor_ = 0.0;
  std::chrono::steady_clock::time_point start_;
  SolverRun run_;
  std::vector<Vector> visited_;
  std::vector<double> visited_values_;
};

Vector composite_gradient(const TensorModel& model) {
  Vector g = model.smooth_gradient_at_center();
  if (!model.composite().is_zero()) g += model.composite().gradient(model.center());
  return g;
}

SolverRun run_method(const ProblemInstance& problem, const SolverConfig& config, Variant variant) {
  Session s(problem, config);
  const ProblemInstance& prob = s.problem();
  Vector x0 = config.x0.size() > 0 ? config.x0 : Vector::Zero(prob.dimension());
  require(x0.size() == prob.dimension(), "x0 dimension mismatch");

  Vector x = x0;
  double fx = prob.objective(x);
  s.floor_for(fx);
  s.record(0, x, fx, std::nullopt, std::nullopt, std::nullopt, 0, true);
  if (s.check_value_stops(fx)) return s.finish(x, fx);

  std::vector<double> history{fx};
  std::optional<Vector> warm;
  std::optional<double> retry_delta;

  for (long k = 1; k <= config.max_iterations; ++k) {
    Vector center = x;
    if (variant == Variant::averaging) {
      const double lambda = averaging_weight(k - 1, config.order);
      center = lambda * x + (1.0 - lambda) * x0;
    }
    const TensorModel model = s.freeze(center);
    if (variant != Variant::averaging || k == 1) {
      if (s.check_gradient_stops(x, composite_gradient(model))) break;
    } else {
      s.run().trace.back().gradient_norm = prob.norm().dual_norm(composite_gradient(model));
    }

    double requested = 0.0;
    if (retry_delta) {
      requested = *retry_delta;
    } else {
      try {
        requested = config.policy.next_delta(k, history);
      } catch (const ContractViolation& e) {
        s.run().status = RunStatus::diverged;
        s.run().message = e.what();
        break;
      }
    }
    const double delta = std::max(requested, s.floor());

    MonotoneStep result;
    double h_used = 0.0;
    try {
      if (variant == Variant::monotone_two) {
        result = s.step(
            model,
            [&](const TensorModel& m) { return monotone_step(prob, m, delta, s.floor(), config.subsolver); },
            h_used);
      } else {
        const std::optional<Vector> start = warm;
        result = s.step(
            model,
            [&](const TensorModel& m) {
              MonotoneStep out;
              try {
                out.step = inexact_step(m, delta, config.subsolver, start);
              } catch (const SubsolverStall& stall) {
                // attainable precision reached; continue from the best point
                out.step = stall.best();
              }
              out.objective = prob.objective(out.step.point);
              out.effective_delta = delta;
              return out;
            },
            h_used);
      }
    } catch (const SubsolverStall& e) {
      s.run().status = RunStatus::subsolver_stall;
      s.run().message = e.what();
      break;
    } catch (const NumericalError& e) {
      s.run().status = RunStatus::diverged;
      s.run().message = e.what();
      break;
    }

    const StepResult& st = result.step;
    switch (variant) {
      case Variant::monotone_one: {
        if (result.objective < fx) {
          x = st.point;
          fx = result.objective;
          warm.reset();
          retry_delta.reset();
          history.push_back(fx);
          s.record(k, x, fx, delta, st.certified_residual, h_used, st.inner_iterations, true);
        } else {
          s.record(k, x, fx, delta, st.certified_residual, h_used, st.inner_iterations, false);
          if (config.subsolver.kind == SubsolverConfig::Kind::exact || delta <= s.floor()) {
            s.run().status = RunStatus::monotone_floor;
            s.run().message = "no decrease at the accuracy floor";
            return s.finish(x, fx);
          }
          warm = st.point;
          retry_delta = 0.5 * delta;
        }
        break;
      }
      case Variant::monotone_two: {
        if (result.stationary) {
          s.run().status = RunStatus::monotone_floor;
          s.run().message = "monotone floor reached";
          return s.finish(x, fx);
        }
        x = st.point;
        fx = result.objective;
        history.push_back(fx);
        s.record(k, x, fx, result.effective_delta, st.certified_residual, h_used, st.inner_iterations, true);
        break;
      }
      case Variant::averaging: {
        x = st.point;
        fx = result.objective;
        // the adaptive rule needs monotone history; feed it the running best
        history.push_back(std::min(history.back(), fx));
        s.record(k, x, fx, delta, st.certified_residual, h_used, st.inner_iterations, true);
        break;
      }
    }
    if (s.check_value_stops(fx)) break;
  }
  return s.finish(x, fx);
}

}  // namespace

SolverRun monotone_method_I(const ProblemInstance& problem, const SolverConfig& config) {
  return run_method(problem, config, Variant::monotone_one);
}

SolverRun monotone_method_II(const ProblemInstance& problem, const SolverConfig& config) {
  return run_method(problem, config, Variant::monotone_two);
}

SolverRun averaging_method(const ProblemInstance& problem, const SolverConfig& config) {
  return run_method(problem, config, Variant::averaging);
}

}  // namespace itm

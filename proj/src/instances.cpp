#include <cmath>
#include <limits>

#include "itm/errors.hpp"
#include "itm/problems.hpp"
#include "itm/random.hpp"

namespace itm {

Vector ProblemInstance::objective_gradient(const Vector& x) const {
  Vector g = smooth->gradient(x);
  if (!composite.is_zero()) g += composite.gradient(x);
  return g;
}

ProblemInstance generate_shifted_logsumexp(Eigen::Index n, Eigen::Index m, double mu, std::uint64_t seed) {
  require(n >= 1 && m >= n, "shifted log-sum-exp needs m >= n >= 1");
  require(mu > 0.0, "log-sum-exp smoothing must be positive");
  for (int attempt = 0; attempt < 10; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL);
    Matrix a(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    }
    const Vector b = rng.uniform_vector(m, -1.0, 1.0);

    // Gradient of the preliminary function at the origin is A^T softmax(-b / mu).
    Vector z = -b / mu;
    Vector w = (z.array() - z.maxCoeff()).exp();
    w /= w.sum();
    const Vector shift = a.transpose() * w;
    a.rowwise() -= shift.transpose();

    try {
      auto oracle = logsumexp_oracle(a, b, mu);
      const double fstar = oracle->value(Vector::Zero(n));
      ProblemInstance instance;
      instance.smooth = oracle;
      instance.optimum = KnownOptimum{Vector::Zero(n), fstar};
      instance.name = "logsumexp";
      return instance;
    } catch (const FactorizationError&) {
      continue;
    }
  }
  throw FactorizationError("shifted log-sum-exp: norm operator singular after 10 attempts");
}

ProblemInstance powered_chain_instance(Eigen::Index n, double q, double c) {
  require(n >= 1, "chain dimension must be positive");
  ProblemInstance instance;
  instance.smooth = std::make_shared<PoweredChainOracle>(n, q, c);
  instance.optimum = KnownOptimum{Vector::Zero(n), 0.0};
  instance.name = "powered_chain";
  return instance;
}

ProblemInstance logistic_instance(std::shared_ptr<const Dataset> data, double l2, std::string name) {
  ProblemInstance instance;
  instance.smooth = logistic_oracle(std::move(data), l2);
  instance.name = std::move(name);
  return instance;
}

Dataset generate_classification(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  require(n >= 1 && m >= 1, "classification data needs positive sizes");
  Rng rng(seed);
  const Vector teacher = rng.uniform_vector(n, -1.0, 1.0);
  const double scale = std::sqrt(static_cast<double>(n) / 9.0);
  Matrix dense(m, n);
  Vector labels(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) dense(i, j) = rng.uniform(-1.0, 1.0);
    const double margin = dense.row(i).dot(teacher) / scale + rng.uniform(-1.0, 1.0);
    labels[i] = margin > 0.0 ? 1.0 : -1.0;
  }
  Dataset data;
  data.features = dense.sparseView();
  data.features.makeCompressed();
  data.labels = std::move(labels);
  data.source = "synthetic:n=" + std::to_string(n) + ",m=" + std::to_string(m) + ",seed=" + std::to_string(seed);
  return data;
}

// ---------------------------------------------------------------------------

double fd_step(const Vector& x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + x.norm());
}

Vector fd_gradient(const std::function<double(const Vector&)>& fn, const Vector& x) {
  const double t = fd_step(x);
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + t;
    const double up = fn(probe);
    probe[i] = x[i] - t;
    const double down = fn(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * t);
  }
  return g;
}

Vector fd_directional(const std::function<Vector(const Vector&)>& fn, const Vector& x, const Vector& h) {
  const double t = fd_step(x);
  return (fn(x + t * h) - fn(x - t * h)) / (2.0 * t);
}

double relative_error(const Vector& approx, const Vector& exact) {
  return (approx - exact).norm() / std::max(exact.norm(), 1.0);
}

DerivativeReport check_derivatives(const SmoothOracle& oracle, int trials, std::uint64_t seed, double scale,
                                   double tolerance) {
  require(trials >= 1, "derivative check needs at least one trial");
  Rng rng(seed);
  DerivativeReport report;
  report.tolerance = tolerance;
  report.trials = trials;
  const Eigen::Index n = oracle.dimension();
  for (int trial = 0; trial < trials; ++trial) {
    const Vector x = rng.uniform_vector(n, -scale, scale);
    const Vector h = rng.unit_vector(n);
    const Vector fd = fd_gradient([&](const Vector& y) { return oracle.value(y); }, x);
    report.max_gradient_error = std::max(report.max_gradient_error, relative_error(fd, oracle.gradient(x)));
    const Vector fd_hv = fd_directional([&](const Vector& y) { return oracle.gradient(y); }, x, h);
    report.max_hessian_vec_error =
        std::max(report.max_hessian_vec_error, relative_error(fd_hv, oracle.hessian_vec(x, h)));
  }
  return report;
}

}  // namespace itm

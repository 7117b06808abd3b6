#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "itm/linalg.hpp"

namespace itm {

/// Evaluator of a smooth convex function f with its derivatives.
///
/// Implementations are immutable after construction; every member is safe to
/// call concurrently. `lipschitz(p)` returns the known constant L_p of the p-th
/// derivative, measured in the oracle's norm, when one is available.
class SmoothOracle {
 public:
  SmoothOracle(NormOperator norm, std::map<int, double> lipschitz)
      : norm_(std::move(norm)), lipschitz_(std::move(lipschitz)) {}
  virtual ~SmoothOracle() = default;

  Eigen::Index dimension() const noexcept { return norm_.dimension(); }
  const NormOperator& norm() const noexcept { return norm_; }
  std::optional<double> lipschitz(int p) const;
  const std::map<int, double>& lipschitz_constants() const noexcept { return lipschitz_; }

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Vector hessian_vec(const Vector& x, const Vector& h) const = 0;
  /// Dense Hessian. The default assembles it column by column from hessian_vec.
  virtual Matrix hessian(const Vector& x) const;

 private:
  NormOperator norm_;
  std::map<int, double> lipschitz_;
};

/// Oracle-call tallies; hessian() counts as `dimension` Hessian-vector products.
struct OracleCounters {
  std::uint64_t value = 0;
  std::uint64_t gradient = 0;
  std::uint64_t hessian_vec = 0;
};

/// Decorator that tallies calls into a run-local counter block.
class CountingOracle final : public SmoothOracle {
 public:
  CountingOracle(std::shared_ptr<const SmoothOracle> base, std::shared_ptr<OracleCounters> counters);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& h) const override;
  Matrix hessian(const Vector& x) const override;

  const OracleCounters& counters() const noexcept { return *counters_; }

 private:
  std::shared_ptr<const SmoothOracle> base_;
  std::shared_ptr<OracleCounters> counters_;
};

/// f(x) = 1/2 <Qx, x> + <c, x> + constant.
class QuadraticOracle final : public SmoothOracle {
 public:
  QuadraticOracle(Matrix q, Vector c, double constant, NormOperator norm, std::map<int, double> lipschitz = {});

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& h) const override;
  Matrix hessian(const Vector& x) const override;

 private:
  Matrix q_;
  Vector c_;
  double constant_;
};

/// Binary classification data: rows are examples, labels are +1/-1.
struct Dataset {
  Eigen::SparseMatrix<double, Eigen::RowMajor> features;
  Vector labels;
  std::string source;

  Eigen::Index examples() const noexcept { return features.rows(); }
  Eigen::Index dimension() const noexcept { return features.cols(); }
};

/// Reads LIBSVM sparse text (`label idx:val ...`, 1-based ascending indices).
/// Throws ParseError with the offending line number.
Dataset parse_libsvm(const std::string& path);
Dataset parse_libsvm(std::istream& in, const std::string& source);

/// Dense features uniform on [-1, 1] with labels from a noisy linear teacher.
Dataset generate_classification(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

/// f(x) = (1/m) sum_i log(1 + exp(-y_i <a_i, x>)) + l2/2 ||x||^2, standard Euclidean norm.
class LogisticOracle final : public SmoothOracle {
 public:
  LogisticOracle(std::shared_ptr<const Dataset> data, double l2);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& h) const override;
  Matrix hessian(const Vector& x) const override;

 private:
  std::shared_ptr<const Dataset> data_;
  double l2_;
};

std::shared_ptr<const SmoothOracle> logistic_oracle(std::shared_ptr<const Dataset> data, double l2);

/// f(x) = mu * log(sum_i exp((<a_i, x> - b_i) / mu)), evaluated with max-shift.
///
/// When `norm` is the operator sum_i a_i a_i^T the constants L_p = c_p / mu^p
/// with (c_1, c_2, c_3) = (1, 2, 4) are attached.
class LogSumExpOracle final : public SmoothOracle {
 public:
  LogSumExpOracle(Matrix a, Vector b, double mu, NormOperator norm, std::map<int, double> lipschitz);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& h) const override;
  Matrix hessian(const Vector& x) const override;

  const Matrix& rows() const noexcept { return a_; }
  const Vector& offsets() const noexcept { return b_; }
  double smoothing() const noexcept { return mu_; }

 private:
  /// Softmax weights at x and the shifted log-partition value.
  std::pair<Vector, double> weights(const Vector& x) const;

  Matrix a_;
  Vector b_;
  double mu_;
};

/// Builds the oracle with norm B = sum_i a_i a_i^T and the matching constants.
/// Throws FactorizationError if B is singular.
std::shared_ptr<const LogSumExpOracle> logsumexp_oracle(Matrix a, Vector b, double mu);

/// f(x) = |x_1|^q + sum_{i>=2} |x_i - c x_{i-1}|^q under the standard norm.
class PoweredChainOracle final : public SmoothOracle {
 public:
  PoweredChainOracle(Eigen::Index n, double q, double c);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& h) const override;
  Matrix hessian(const Vector& x) const override;

  double power() const noexcept { return q_; }
  double coupling() const noexcept { return c_; }

 private:
  Vector differences(const Vector& x) const;
  Vector apply_transpose(const Vector& w) const;

  double q_;
  double c_;
};

/// max over ||h||_2 = 1 of sum_i |<d_i, h>|^3 for the chain's difference rows
/// d_1 = e_1, d_i = e_i - c e_{i-1}; multistart nonlinear power iteration.
double chain_cubic_gain(Eigen::Index n, double c);

/// One term of the composite part psi.
class CompositePart {
 public:
  enum class Kind { zero, power_norm, quadratic };

  static CompositePart zero();
  /// mu/q ||x - center||^q
  static CompositePart power_norm(double mu, double q, Vector center, NormOperator norm);
  /// mu/2 ||x - center||^2
  static CompositePart quadratic(double mu, Vector center, NormOperator norm);

  Kind kind() const noexcept { return kind_; }
  double mu() const noexcept { return mu_; }
  double power() const noexcept { return q_; }
  const Vector& center() const noexcept { return center_; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Vector hessian_vec(const Vector& x, const Vector& h) const;
  Matrix hessian(const Vector& x) const;

  /// Modulus of uniform convexity of degree p+1, or 0 if there is none.
  /// Power norms with q = p+1 give mu 2^{1-p}; quadratics give mu at p = 1 and,
  /// on a ball of radius `ball_radius`, (p+1) mu / (2^p D^{p-1}).
  double uniform_convexity(int p, std::optional<double> ball_radius = std::nullopt) const;

  bool is_quadratic() const noexcept;
  CompositePart scaled(double factor) const;

 private:
  Kind kind_ = Kind::zero;
  double mu_ = 0.0;
  double q_ = 2.0;
  Vector center_;
  std::optional<NormOperator> norm_;
};

/// psi(x) = sum_j part_j(x) + <linear, x> + constant. All members differentiable.
struct Composite {
  std::vector<CompositePart> parts;
  Vector linear;  // empty means zero
  double constant = 0.0;

  static Composite none() { return {}; }
  static Composite single(CompositePart part) { return {{std::move(part)}, {}, 0.0}; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Vector hessian_vec(const Vector& x, const Vector& h) const;
  Matrix hessian(const Vector& x) const;
  bool is_zero() const;
  bool is_quadratic() const;
  double uniform_convexity(int p) const;
  Composite scaled(double factor) const;
  Composite plus(const Composite& other) const;
};

struct KnownOptimum {
  Vector x;
  double value;
};

/// F = f + psi with optional known minimizer.
struct ProblemInstance {
  std::shared_ptr<const SmoothOracle> smooth;
  Composite composite;
  std::optional<KnownOptimum> optimum;
  std::string name;

  Eigen::Index dimension() const { return smooth->dimension(); }
  const NormOperator& norm() const { return smooth->norm(); }
  double objective(const Vector& x) const { return smooth->value(x) + composite.value(x); }
  Vector objective_gradient(const Vector& x) const;
};

/// Shifted log-sum-exp with minimizer at the origin; norm B = sum a_i a_i^T.
/// Retries up to 10 seeds when B is singular.
ProblemInstance generate_shifted_logsumexp(Eigen::Index n, Eigen::Index m, double mu, std::uint64_t seed);

ProblemInstance powered_chain_instance(Eigen::Index n, double q, double c);

ProblemInstance logistic_instance(std::shared_ptr<const Dataset> data, double l2, std::string name);

struct DerivativeReport {
  double max_gradient_error = 0.0;
  double max_hessian_vec_error = 0.0;
  double tolerance = 1e-4;
  int trials = 0;
  bool passed() const { return max_gradient_error <= tolerance && max_hessian_vec_error <= tolerance; }
};

/// Central-difference step (eps^{1/3})(1 + ||x||).
double fd_step(const Vector& x);
Vector fd_gradient(const std::function<double(const Vector&)>& fn, const Vector& x);
Vector fd_directional(const std::function<Vector(const Vector&)>& fn, const Vector& x, const Vector& h);
/// ||approx - exact|| / max(||exact||, 1)
double relative_error(const Vector& approx, const Vector& exact);

/// Compares analytic derivatives with central differences at `trials` points
/// sampled uniformly from [-scale, scale]^n.
DerivativeReport check_derivatives(const SmoothOracle& oracle, int trials, std::uint64_t seed, double scale = 1.0,
                                   double tolerance = 1e-4);

}  // namespace itm

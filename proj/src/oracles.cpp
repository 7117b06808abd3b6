#include <cmath>
#include <limits>

#include "itm/errors.hpp"
#include "itm/problems.hpp"
#include "itm/random.hpp"

namespace itm {

std::optional<double> SmoothOracle::lipschitz(int p) const {
  const auto it = lipschitz_.find(p);
  if (it == lipschitz_.end()) return std::nullopt;
  return it->second;
}

Matrix SmoothOracle::hessian(const Vector& x) const {
  const Eigen::Index n = dimension();
  Matrix h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) h.col(j) = hessian_vec(x, Vector::Unit(n, j));
  return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------------

CountingOracle::CountingOracle(std::shared_ptr<const SmoothOracle> base, std::shared_ptr<OracleCounters> counters)
    : SmoothOracle(base->norm(), base->lipschitz_constants()), base_(std::move(base)), counters_(std::move(counters)) {}

double CountingOracle::value(const Vector& x) const {
  ++counters_->value;
  return base_->value(x);
}

Vector CountingOracle::gradient(const Vector& x) const {
  ++counters_->gradient;
  return base_->gradient(x);
}

Vector CountingOracle::hessian_vec(const Vector& x, const Vector& h) const {
  ++counters_->hessian_vec;
  return base_->hessian_vec(x, h);
}

Matrix CountingOracle::hessian(const Vector& x) const {
  counters_->hessian_vec += static_cast<std::uint64_t>(dimension());
  return base_->hessian(x);
}

// ---------------------------------------------------------------------------

QuadraticOracle::QuadraticOracle(Matrix q, Vector c, double constant, NormOperator norm,
                                 std::map<int, double> lipschitz)
    : SmoothOracle(std::move(norm), std::move(lipschitz)), q_(std::move(q)), c_(std::move(c)), constant_(constant) {
  require(q_.rows() == dimension() && q_.cols() == dimension() && c_.size() == dimension(),
          "quadratic oracle dimensions do not match the norm");
  q_ = 0.5 * (q_ + q_.transpose());
}

double QuadraticOracle::value(const Vector& x) const { return 0.5 * x.dot(q_ * x) + c_.dot(x) + constant_; }
Vector QuadraticOracle::gradient(const Vector& x) const { return q_ * x + c_; }
Vector QuadraticOracle::hessian_vec(const Vector&, const Vector& h) const { return q_ * h; }
Matrix QuadraticOracle::hessian(const Vector&) const { return q_; }

// ---------------------------------------------------------------------------

namespace {

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

// 1 / (1 + exp(z))
double sigmoid_neg(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

std::map<int, double> logistic_constants(const Dataset& data, double l2) {
  const double m = static_cast<double>(data.examples());
  double sq = 0.0;
  double cube = 0.0;
  for (Eigen::Index i = 0; i < data.features.outerSize(); ++i) {
    double row = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(data.features, i); it; ++it) {
      row += it.value() * it.value();
    }
    sq += row;
    cube += row * std::sqrt(row);
  }
  // sup |phi''| = 1/4 and sup |phi'''| = 1/(6 sqrt 3) for phi(t) = log(1 + e^{-t}).
  return {{1, sq / (4.0 * m) + l2}, {2, cube / (6.0 * std::sqrt(3.0) * m)}};
}

}  // namespace

LogisticOracle::LogisticOracle(std::shared_ptr<const Dataset> data, double l2)
    : SmoothOracle(NormOperator::identity(data->dimension()), logistic_constants(*data, l2)),
      data_(std::move(data)),
      l2_(l2) {
  require(data_->examples() > 0, "logistic oracle needs a non-empty dataset");
  require(l2_ >= 0.0, "l2 regularization must be nonnegative");
}

double LogisticOracle::value(const Vector& x) const {
  require(x.size() == dimension(), "dimension mismatch");
  const Vector margins = (data_->features * x).cwiseProduct(data_->labels);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) sum += softplus_neg(margins[i]);
  return sum / static_cast<double>(margins.size()) + 0.5 * l2_ * x.squaredNorm();
}

Vector LogisticOracle::gradient(const Vector& x) const {
  require(x.size() == dimension(), "dimension mismatch");
  const Vector margins = (data_->features * x).cwiseProduct(data_->labels);
  Vector w(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) w[i] = -data_->labels[i] * sigmoid_neg(margins[i]);
  return data_->features.transpose() * w / static_cast<double>(margins.size()) + l2_ * x;
}

Vector LogisticOracle::hessian_vec(const Vector& x, const Vector& h) const {
  require(x.size() == dimension() && h.size() == dimension(), "dimension mismatch");
  const Vector margins = (data_->features * x).cwiseProduct(data_->labels);
  Vector w = data_->features * h;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const double s = sigmoid_neg(margins[i]);
    w[i] *= s * (1.0 - s);
  }
  return data_->features.transpose() * w / static_cast<double>(margins.size()) + l2_ * h;
}

Matrix LogisticOracle::hessian(const Vector& x) const {
  require(x.size() == dimension(), "dimension mismatch");
  const Vector margins = (data_->features * x).cwiseProduct(data_->labels);
  Vector w(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const double s = sigmoid_neg(margins[i]);
    w[i] = s * (1.0 - s) / static_cast<double>(margins.size());
  }
  const Matrix dense = Matrix(data_->features);
  Matrix h = dense.transpose() * w.asDiagonal() * dense;
  h.diagonal().array() += l2_;
  return 0.5 * (h + h.transpose());
}

std::shared_ptr<const SmoothOracle> logistic_oracle(std::shared_ptr<const Dataset> data, double l2) {
  return std::make_shared<LogisticOracle>(std::move(data), l2);
}

// ---------------------------------------------------------------------------

LogSumExpOracle::LogSumExpOracle(Matrix a, Vector b, double mu, NormOperator norm, std::map<int, double> lipschitz)
    : SmoothOracle(std::move(norm), std::move(lipschitz)), a_(std::move(a)), b_(std::move(b)), mu_(mu) {
  require(mu_ > 0.0, "log-sum-exp smoothing must be positive");
  require(a_.rows() > 0 && a_.cols() == dimension() && b_.size() == a_.rows(),
          "log-sum-exp data dimensions do not match");
}

std::pair<Vector, double> LogSumExpOracle::weights(const Vector& x) const {
  require(x.size() == dimension(), "dimension mismatch");
  Vector z = (a_ * x - b_) / mu_;
  const double top = z.maxCoeff();
  Vector e = (z.array() - top).exp();
  const double sum = e.sum();
  return {e / sum, top + std::log(sum)};
}

double LogSumExpOracle::value(const Vector& x) const { return mu_ * weights(x).second; }

Vector LogSumExpOracle::gradient(const Vector& x) const { return a_.transpose() * weights(x).first; }

Vector LogSumExpOracle::hessian_vec(const Vector& x, const Vector& h) const {
  require(h.size() == dimension(), "dimension mismatch");
  const Vector pi = weights(x).first;
  const Vector u = a_ * h;
  const double mean = pi.dot(u);
  return a_.transpose() * (pi.array() * (u.array() - mean)).matrix() / mu_;
}

Matrix LogSumExpOracle::hessian(const Vector& x) const {
  const Vector pi = weights(x).first;
  const Vector g = a_.transpose() * pi;
  Matrix h = a_.transpose() * pi.asDiagonal() * a_ - g * g.transpose();
  h /= mu_;
  return 0.5 * (h + h.transpose());
}

std::shared_ptr<const LogSumExpOracle> logsumexp_oracle(Matrix a, Vector b, double mu) {
  require(mu > 0.0, "log-sum-exp smoothing must be positive");
  NormOperator norm = NormOperator::dense(a.transpose() * a);
  // Constants 1, 2, 4 hold for mu = 1; f_mu(x) = mu f_1(x / mu) scales D^{p+1} by mu^{-p}.
  std::map<int, double> constants{{1, 1.0 / mu}, {2, 2.0 / (mu * mu)}, {3, 4.0 / (mu * mu * mu)}};
  return std::make_shared<LogSumExpOracle>(std::move(a), std::move(b), mu, std::move(norm), std::move(constants));
}

// ---------------------------------------------------------------------------

double chain_cubic_gain(Eigen::Index n, double c) {
  require(n >= 1, "chain dimension must be positive");
  auto apply = [&](const Vector& h) {
    Vector u(n);
    u[0] = h[0];
    for (Eigen::Index i = 1; i < n; ++i) u[i] = h[i] - c * h[i - 1];
    return u;
  };
  auto apply_t = [&](const Vector& w) {
    Vector g = w;
    for (Eigen::Index j = 0; j + 1 < n; ++j) g[j] -= c * w[j + 1];
    return g;
  };
  auto gain = [&](const Vector& h) { return apply(h).cwiseAbs().array().cube().sum(); };

  Rng rng(0x5eed5eedULL);
  double best = 0.0;
  for (int start = 0; start < 64; ++start) {
    Vector h;
    if (start == 0) {
      h = Vector::Ones(n);
    } else if (start == 1) {
      h = Vector::NullaryExpr(n, [](Eigen::Index i) { return (i % 2 == 0) ? 1.0 : -1.0; });
    } else {
      h = rng.uniform_vector(n, -1.0, 1.0);
    }
    h.normalize();
    double current = gain(h);
    for (int it = 0; it < 2000; ++it) {
      const Vector u = apply(h);
      Vector next = apply_t(u.cwiseAbs().cwiseProduct(u));
      const double norm = next.norm();
      if (norm == 0.0) break;
      next /= norm;
      const double value = gain(next);
      h = next;
      if (value <= current * (1.0 + 1e-15)) {
        current = std::max(current, value);
        break;
      }
      current = value;
    }
    best = std::max(best, current);
  }
  return best;
}

namespace {

std::map<int, double> chain_constants(Eigen::Index n, double q, double c) {
  if (q == 2.0) {
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d(i, i) = 1.0;
      if (i > 0) d(i, i - 1) = -c;
    }
    const double top = sym_eigendecomposition(d.transpose() * d).eigenvalues.maxCoeff();
    return {{1, 2.0 * top}, {2, 0.0}};
  }
  if (q == 3.0) {
    // |D^3 f(x)[h]^3| <= 6 sum_i |<d_i, h>|^3, attained where all signs agree.
    return {{2, 6.0 * chain_cubic_gain(n, c)}};
  }
  return {};
}

}  // namespace

PoweredChainOracle::PoweredChainOracle(Eigen::Index n, double q, double c)
    : SmoothOracle(NormOperator::identity(n), chain_constants(n, q, c)), q_(q), c_(c) {
  require(q >= 2.0, "powered chain exponent must be at least 2");
}

Vector PoweredChainOracle::differences(const Vector& x) const {
  require(x.size() == dimension(), "dimension mismatch");
  Vector t(x.size());
  t[0] = x[0];
  for (Eigen::Index i = 1; i < x.size(); ++i) t[i] = x[i] - c_ * x[i - 1];
  return t;
}

Vector PoweredChainOracle::apply_transpose(const Vector& w) const {
  Vector g = w;
  for (Eigen::Index j = 0; j + 1 < w.size(); ++j) g[j] -= c_ * w[j + 1];
  return g;
}

double PoweredChainOracle::value(const Vector& x) const {
  return differences(x).cwiseAbs().array().pow(q_).sum();
}

Vector PoweredChainOracle::gradient(const Vector& x) const {
  const Vector t = differences(x);
  Vector w(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double a = std::abs(t[i]);
    w[i] = (a == 0.0) ? 0.0 : q_ * std::pow(a, q_ - 1.0) * (t[i] > 0 ? 1.0 : -1.0);
  }
  return apply_transpose(w);
}

Vector PoweredChainOracle::hessian_vec(const Vector& x, const Vector& h) const {
  require(h.size() == dimension(), "dimension mismatch");
  const Vector t = differences(x);
  Vector u = differences(h);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double a = std::abs(t[i]);
    const double curvature = (q_ == 2.0) ? 2.0 : (a == 0.0 ? 0.0 : q_ * (q_ - 1.0) * std::pow(a, q_ - 2.0));
    u[i] *= curvature;
  }
  return apply_transpose(u);
}

Matrix PoweredChainOracle::hessian(const Vector& x) const {
  const Vector t = differences(x);
  const Eigen::Index n = t.size();
  Matrix h = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::abs(t[i]);
    const double w = (q_ == 2.0) ? 2.0 : (a == 0.0 ? 0.0 : q_ * (q_ - 1.0) * std::pow(a, q_ - 2.0));
    // d_i = e_i - c e_{i-1}
    h(i, i) += w;
    if (i > 0) {
      h(i - 1, i - 1) += w * c_ * c_;
      h(i, i - 1) -= w * c_;
      h(i - 1, i) -= w * c_;
    }
  }
  return h;
}

}  // namespace itm

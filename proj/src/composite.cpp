#include <cmath>

#include "itm/errors.hpp"
#include "itm/problems.hpp"

namespace itm {

CompositePart CompositePart::zero() { return {}; }

CompositePart CompositePart::power_norm(double mu, double q, Vector center, NormOperator norm) {
  require(mu >= 0.0, "composite mu must be nonnegative");
  require(q >= 2.0, "power-norm composite needs q >= 2 to stay twice differentiable");
  require(center.size() == norm.dimension(), "composite center dimension mismatch");
  CompositePart part;
  part.kind_ = Kind::power_norm;
  part.mu_ = mu;
  part.q_ = q;
  part.center_ = std::move(center);
  part.norm_ = std::move(norm);
  return part;
}

CompositePart CompositePart::quadratic(double mu, Vector center, NormOperator norm) {
  require(mu >= 0.0, "composite mu must be nonnegative");
  require(center.size() == norm.dimension(), "composite center dimension mismatch");
  CompositePart part;
  part.kind_ = Kind::quadratic;
  part.mu_ = mu;
  part.q_ = 2.0;
  part.center_ = std::move(center);
  part.norm_ = std::move(norm);
  return part;
}

bool CompositePart::is_quadratic() const noexcept { return kind_ != Kind::power_norm || q_ == 2.0; }

CompositePart CompositePart::scaled(double factor) const {
  require(factor >= 0.0, "composite scale must be nonnegative");
  CompositePart part = *this;
  part.mu_ *= factor;
  return part;
}

double CompositePart::value(const Vector& x) const {
  if (kind_ == Kind::zero) return 0.0;
  const double r = norm_->primal_norm(x - center_);
  return mu_ / q_ * std::pow(r, q_);
}

Vector CompositePart::gradient(const Vector& x) const {
  if (kind_ == Kind::zero) return Vector::Zero(x.size());
  const Vector br = norm_->apply(x - center_);
  if (q_ == 2.0) return mu_ * br;
  const double r = std::sqrt(std::max(0.0, br.dot(x - center_)));
  if (r == 0.0) return Vector::Zero(x.size());
  return mu_ * std::pow(r, q_ - 2.0) * br;
}

Vector CompositePart::hessian_vec(const Vector& x, const Vector& h) const {
  if (kind_ == Kind::zero) return Vector::Zero(x.size());
  const Vector bh = norm_->apply(h);
  if (q_ == 2.0) return mu_ * bh;
  const Vector diff = x - center_;
  const Vector br = norm_->apply(diff);
  const double r = std::sqrt(std::max(0.0, br.dot(diff)));
  if (r == 0.0) return Vector::Zero(x.size());
  return mu_ * std::pow(r, q_ - 2.0) * bh + mu_ * (q_ - 2.0) * std::pow(r, q_ - 4.0) * br.dot(h) * br;
}

Matrix CompositePart::hessian(const Vector& x) const {
  const Eigen::Index n = x.size();
  if (kind_ == Kind::zero) return Matrix::Zero(n, n);
  const Matrix b = norm_->to_matrix();
  if (q_ == 2.0) return mu_ * b;
  const Vector diff = x - center_;
  const Vector br = norm_->apply(diff);
  const double r = std::sqrt(std::max(0.0, br.dot(diff)));
  if (r == 0.0) return Matrix::Zero(n, n);
  return mu_ * std::pow(r, q_ - 2.0) * b + mu_ * (q_ - 2.0) * std::pow(r, q_ - 4.0) * br * br.transpose();
}

double CompositePart::uniform_convexity(int p, std::optional<double> ball_radius) const {
  require(p >= 1, "order must be positive");
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::power_norm:
      if (q_ == 2.0 && p == 1) return mu_;
      if (std::abs(q_ - (p + 1)) < 1e-12) return mu_ * std::pow(2.0, 1 - p);
      return 0.0;
    case Kind::quadratic:
      if (p == 1) return mu_;
      if (ball_radius) {
        require(*ball_radius > 0.0, "ball radius must be positive");
        return (p + 1) * mu_ / (std::pow(2.0, p) * std::pow(*ball_radius, p - 1));
      }
      return 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

double Composite::value(const Vector& x) const {
  double v = constant;
  for (const auto& part : parts) v += part.value(x);
  if (linear.size() > 0) v += linear.dot(x);
  return v;
}

Vector Composite::gradient(const Vector& x) const {
  Vector g = linear.size() > 0 ? linear : Vector::Zero(x.size());
  for (const auto& part : parts) {
    if (part.kind() != CompositePart::Kind::zero) g += part.gradient(x);
  }
  return g;
}

Vector Composite::hessian_vec(const Vector& x, const Vector& h) const {
  Vector out = Vector::Zero(x.size());
  for (const auto& part : parts) {
    if (part.kind() != CompositePart::Kind::zero) out += part.hessian_vec(x, h);
  }
  return out;
}

Matrix Composite::hessian(const Vector& x) const {
  Matrix out = Matrix::Zero(x.size(), x.size());
  for (const auto& part : parts) {
    if (part.kind() != CompositePart::Kind::zero) out += part.hessian(x);
  }
  return out;
}

bool Composite::is_zero() const {
  if (constant != 0.0) return false;
  if (linear.size() > 0 && linear.cwiseAbs().maxCoeff() > 0.0) return false;
  for (const auto& part : parts) {
    if (part.kind() != CompositePart::Kind::zero && part.mu() != 0.0) return false;
  }
  return true;
}

bool Composite::is_quadratic() const {
  for (const auto& part : parts) {
    if (!part.is_quadratic()) return false;
  }
  return true;
}

double Composite::uniform_convexity(int p) const {
  double sigma = 0.0;
  for (const auto& part : parts) sigma += part.uniform_convexity(p);
  return sigma;
}

Composite Composite::scaled(double factor) const {
  Composite out;
  for (const auto& part : parts) out.parts.push_back(part.scaled(factor));
  if (linear.size() > 0) out.linear = factor * linear;
  out.constant = factor * constant;
  return out;
}

Composite Composite::plus(const Composite& other) const {
  Composite out = *this;
  out.parts.insert(out.parts.end(), other.parts.begin(), other.parts.end());
  if (other.linear.size() > 0) out.linear = out.linear.size() > 0 ? Vector(out.linear + other.linear) : other.linear;
  out.constant += other.constant;
  return out;
}

}  // namespace itm

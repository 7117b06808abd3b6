#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <memory>

namespace itm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Symmetric positive definite operator B defining the primal norm
/// ||x|| = <Bx, x>^{1/2} and its dual ||s||_* = <s, B^{-1}s>^{1/2}.
///
/// Immutable after construction. Dense operators are Cholesky-factorized once;
/// identity and diagonal operators never factorize.
class NormOperator {
 public:
  enum class Kind { identity, diagonal, dense };

  static NormOperator identity(Eigen::Index dim);
  /// Throws ContractViolation unless every entry is positive.
  static NormOperator diagonal(Vector entries);
  /// Throws ContractViolation if not symmetric and FactorizationError if not
  /// numerically positive definite.
  static NormOperator dense(Matrix b);

  Kind kind() const noexcept { return kind_; }
  Eigen::Index dimension() const noexcept { return dim_; }

  /// B h
  Vector apply(const Vector& h) const;
  /// B^{-1} s
  Vector solve(const Vector& s) const;
  /// Solves L^T y = z where B = L L^T (used to map whitened steps back).
  Vector solve_lower_transpose(const Vector& z) const;
  /// Computes L^{-1} s.
  Vector solve_lower(const Vector& s) const;
  /// L^{-1} A L^{-T}, the operator A expressed in B-orthonormal coordinates.
  Matrix whiten(const Matrix& a) const;
  /// Dense copy of B.
  Matrix to_matrix() const;

  double primal_norm(const Vector& x) const;
  double dual_norm(const Vector& s) const;

 private:
  NormOperator() = default;
  void check_dim(const Vector& v) const;

  Kind kind_ = Kind::identity;
  Eigen::Index dim_ = 0;
  Vector diag_;
  std::shared_ptr<const Matrix> dense_;
  std::shared_ptr<const Eigen::LLT<Matrix>> llt_;
};

double primal_norm(const NormOperator& b, const Vector& x);
double dual_norm(const NormOperator& b, const Vector& s);

struct SymmetricEigen {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors;  // columns orthonormal
};

/// Throws ContractViolation if `a` is not symmetric to 1e-10 relative.
SymmetricEigen sym_eigendecomposition(const Matrix& a);

}  // namespace itm

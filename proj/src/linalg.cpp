#include "itm/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "itm/errors.hpp"

namespace itm {

NormOperator NormOperator::identity(Eigen::Index dim) {
  require(dim > 0, "norm operator dimension must be positive");
  NormOperator b;
  b.kind_ = Kind::identity;
  b.dim_ = dim;
  return b;
}

NormOperator NormOperator::diagonal(Vector entries) {
  require(entries.size() > 0, "norm operator dimension must be positive");
  for (Eigen::Index i = 0; i < entries.size(); ++i) {
    require(std::isfinite(entries[i]) && entries[i] > 0.0, "diagonal norm entries must be positive");
  }
  NormOperator b;
  b.kind_ = Kind::diagonal;
  b.dim_ = entries.size();
  b.diag_ = std::move(entries);
  return b;
}

NormOperator NormOperator::dense(Matrix m) {
  require(m.rows() > 0 && m.rows() == m.cols(), "dense norm operator must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "dense norm operator must be symmetric");
  m = 0.5 * (m + m.transpose());
  auto llt = std::make_shared<Eigen::LLT<Matrix>>(m);
  if (llt->info() != Eigen::Success) {
    throw FactorizationError("norm operator is not positive definite; regularize B or reduce dimension");
  }
  // LLT succeeds on some numerically singular inputs; reject tiny pivots.
  const Vector pivots = Matrix(llt->matrixL()).diagonal();
  if (pivots.minCoeff() <= 1e-7 * std::sqrt(m.diagonal().maxCoeff())) {
    throw FactorizationError("norm operator is numerically singular; regularize B or reduce dimension");
  }
  NormOperator b;
  b.kind_ = Kind::dense;
  b.dim_ = m.rows();
  b.dense_ = std::make_shared<const Matrix>(std::move(m));
  b.llt_ = std::move(llt);
  return b;
}

void NormOperator::check_dim(const Vector& v) const {
  require(v.size() == dim_, "vector dimension does not match norm operator");
}

Vector NormOperator::apply(const Vector& h) const {
  check_dim(h);
  switch (kind_) {
    case Kind::identity:
      return h;
    case Kind::diagonal:
      return diag_.cwiseProduct(h);
    case Kind::dense:
      return (*dense_) * h;
  }
  return h;
}

Vector NormOperator::solve(const Vector& s) const {
  check_dim(s);
  switch (kind_) {
    case Kind::identity:
      return s;
    case Kind::diagonal:
      return s.cwiseQuotient(diag_);
    case Kind::dense:
      return llt_->solve(s);
  }
  return s;
}

Vector NormOperator::solve_lower(const Vector& s) const {
  check_dim(s);
  switch (kind_) {
    case Kind::identity:
      return s;
    case Kind::diagonal:
      return s.cwiseQuotient(diag_.cwiseSqrt());
    case Kind::dense:
      return llt_->matrixL().solve(s);
  }
  return s;
}

Vector NormOperator::solve_lower_transpose(const Vector& z) const {
  check_dim(z);
  switch (kind_) {
    case Kind::identity:
      return z;
    case Kind::diagonal:
      return z.cwiseQuotient(diag_.cwiseSqrt());
    case Kind::dense:
      return llt_->matrixU().solve(z);
  }
  return z;
}

Matrix NormOperator::whiten(const Matrix& a) const {
  require(a.rows() == dim_ && a.cols() == dim_, "matrix dimension does not match norm operator");
  switch (kind_) {
    case Kind::identity:
      return a;
    case Kind::diagonal: {
      const Vector s = diag_.cwiseSqrt().cwiseInverse();
      return s.asDiagonal() * a * s.asDiagonal();
    }
    case Kind::dense: {
      Matrix left = llt_->matrixL().solve(a);
      Matrix both = llt_->matrixL().solve(left.transpose());
      return 0.5 * (both + both.transpose());
    }
  }
  return a;
}

Matrix NormOperator::to_matrix() const {
  switch (kind_) {
    case Kind::identity:
      return Matrix::Identity(dim_, dim_);
    case Kind::diagonal:
      return diag_.asDiagonal();
    case Kind::dense:
      return *dense_;
  }
  return {};
}

double NormOperator::primal_norm(const Vector& x) const {
  return std::sqrt(std::max(0.0, x.dot(apply(x))));
}

double NormOperator::dual_norm(const Vector& s) const {
  return std::sqrt(std::max(0.0, s.dot(solve(s))));
}

double primal_norm(const NormOperator& b, const Vector& x) { return b.primal_norm(x); }
double dual_norm(const NormOperator& b, const Vector& s) { return b.dual_norm(s); }

SymmetricEigen sym_eigendecomposition(const Matrix& a) {
  require(a.rows() == a.cols(), "eigendecomposition requires a square matrix");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
          "eigendecomposition requires a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (a + a.transpose()));
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace itm

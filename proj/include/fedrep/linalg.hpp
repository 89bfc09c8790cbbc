#pragma once

#include "fedrep/matrix.hpp"

namespace fedrep {

/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTolerance = 1e-12;

/// Matrix with orthonormal columns, validated on construction
/// (max-norm of Q^T Q - I at most 1e-10).
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Matrix m);

  const Matrix& matrix() const { return m_; }
  Index rows() const { return m_.rows(); }
  Index cols() const { return m_.cols(); }

 private:
  Matrix m_;
};

struct QrResult {
  OrthonormalBasis q;  // rows x cols, orthonormal columns
  Matrix r;            // cols x cols, upper triangular, nonnegative diagonal
};

/// Householder QR of a full-column-rank matrix (rows >= cols). The sign
/// convention forces a nonnegative R diagonal, which pins Q and R uniquely
/// and keeps repeated runs bit-identical.
/// Throws RankDeficientError when sigma_min <= kRankTolerance * sigma_max.
QrResult qr_decompose(const Matrix& a);

/// Orthonormalize the columns of `a`; shorthand for qr_decompose(a).q.
OrthonormalBasis orthonormalize(const Matrix& a);

/// X minimizing ||a X - b||_F for full-column-rank a (rows >= cols),
/// via the Householder factorization. Throws RankDeficientError when the
/// normal equations are numerically singular.
Matrix least_squares(const Matrix& a, const Matrix& b);
Vector least_squares(const Matrix& a, const Vector& b);

/// Minimum-norm solution of min ||a x - b||_2 through the SVD
/// pseudo-inverse; rank decided by kRankTolerance. Handles underdetermined
/// and rank-deficient systems.
Vector solve_min_norm(const Matrix& a, const Vector& b);

/// Orthonormal basis of span(b)^perp, via the full Householder Q.
/// Throws DimensionError when d == k (empty complement).
OrthonormalBasis orthonormal_complement(const OrthonormalBasis& b);

/// Principal angle distance ||B1perp^T B2hat||_2 between the column spaces
/// of two d x k full-rank matrices (orthonormalized internally). Computed
/// through the projector residual (I - B1hat B1hat^T) B2hat, which equals
/// the complement form; tests cross-check against an explicit complement.
/// Result clamped to [0, 1].
double principal_angle_distance(const Matrix& b1, const Matrix& b2);

/// Singular values in descending order, count = min(rows, cols).
/// One-sided Jacobi, so small values keep full relative headroom against
/// the rank cutoff (a Gram-matrix route would square them away).
Vector singular_values(const Matrix& a);

double spectral_norm(const Matrix& a);

struct SvdResult {
  Matrix u;      // rows x p
  Vector sigma;  // p, descending
  Matrix v;      // cols x p        (a ~= u * diag(sigma) * v^T), p = min dim
};

/// Thin SVD via one-sided Jacobi with accumulated right factor.
SvdResult svd(const Matrix& a);

/// Best rank-k approximation (truncated SVD).
Matrix rank_k_truncation(const Matrix& a, Index k);

}  // namespace fedrep

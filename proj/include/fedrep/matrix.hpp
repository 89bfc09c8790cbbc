#pragma once

#include <cstddef>
#include <vector>

#include "fedrep/errors.hpp"

namespace fedrep {

using Index = std::size_t;
using Vector = std::vector<double>;

/// Dense real matrix, row-major storage. Sizes in this project are small
/// (at most a few thousand rows), so everything is plain loops over
/// contiguous doubles; no attempt at blocking or BLAS.
class Matrix {
 public:
  Matrix() = default;

  Matrix(Index rows, Index cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) {
      throw DimensionError("Matrix: rows and cols must be >= 1");
    }
  }

  Matrix(Index rows, Index cols, Vector entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows == 0 || cols == 0) {
      throw DimensionError("Matrix: rows and cols must be >= 1");
    }
    if (data_.size() != rows * cols) {
      throw DimensionError("Matrix: entry count does not match rows*cols");
    }
  }

  static Matrix identity(Index n);
  /// n x n matrix with `diag` on the diagonal.
  static Matrix diagonal(const Vector& diag);
  static Matrix from_rows(const std::vector<Vector>& rows);
  static Matrix column(const Vector& v);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(Index i, Index j) { return data_[i * cols_ + j]; }
  double operator()(Index i, Index j) const { return data_[i * cols_ + j]; }

  double* row_ptr(Index i) { return data_.data() + i * cols_; }
  const double* row_ptr(Index i) const { return data_.data() + i * cols_; }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  Matrix transposed() const;
  Matrix operator*(const Matrix& rhs) const;
  Matrix operator+(const Matrix& rhs) const;
  Matrix operator-(const Matrix& rhs) const;
  Matrix scaled(double s) const;

  /// this^T * rhs without materializing the transpose.
  Matrix gram_with(const Matrix& rhs) const;

  Vector col(Index j) const;
  Vector row(Index i) const;
  void set_col(Index j, const Vector& v);
  void set_row(Index i, const Vector& v);

  double frobenius_norm() const;
  double max_abs() const;
  bool all_finite() const;

  bool operator==(const Matrix& rhs) const = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Vector data_;
};

// Vector helpers shared across the engines.
Vector matvec(const Matrix& a, const Vector& x);            // a * x
Vector matvec_transposed(const Matrix& a, const Vector& x); // a^T * x
Matrix outer(const Vector& u, const Vector& v);             // u v^T
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
Vector axpy(double alpha, const Vector& x, const Vector& y);  // alpha*x + y
Vector scaled(const Vector& v, double s);
bool all_finite(const Vector& v);

}  // namespace fedrep

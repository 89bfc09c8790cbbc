#include "fedrep/matrix.hpp"

#include <cmath>
#include <cstdlib>

namespace fedrep {

Matrix Matrix::identity(Index n) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& diag) {
  Matrix m(diag.size(), diag.size());
  for (Index i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) throw DimensionError("from_rows: no rows");
  Matrix m(rows.size(), rows.front().size());
  for (Index i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) {
      throw DimensionError("from_rows: ragged rows");
    }
    m.set_row(i, rows[i]);
  }
  return m;
}

Matrix Matrix::column(const Vector& v) {
  Matrix m(v.size(), 1);
  for (Index i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (Index i = 0; i < rows_; ++i) {
    for (Index j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw DimensionError("operator*: inner dims differ");
  Matrix out(rows_, rhs.cols_);
  for (Index i = 0; i < rows_; ++i) {
    const double* a = row_ptr(i);
    double* o = out.row_ptr(i);
    for (Index k = 0; k < cols_; ++k) {
      const double aik = a[k];
      if (aik == 0.0) continue;
      const double* b = rhs.row_ptr(k);
      for (Index j = 0; j < rhs.cols_; ++j) o[j] += aik * b[j];
    }
  }
  return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
    throw DimensionError("operator+: shape mismatch");
  }
  Matrix out = *this;
  for (Index i = 0; i < out.data_.size(); ++i) out.data_[i] += rhs.data_[i];
  return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
    throw DimensionError("operator-: shape mismatch");
  }
  Matrix out = *this;
  for (Index i = 0; i < out.data_.size(); ++i) out.data_[i] -= rhs.data_[i];
  return out;
}

Matrix Matrix::scaled(double s) const {
  Matrix out = *this;
  for (double& x : out.data_) x *= s;
  return out;
}

Matrix Matrix::gram_with(const Matrix& rhs) const {
  if (rows_ != rhs.rows_) throw DimensionError("gram_with: row counts differ");
  Matrix out(cols_, rhs.cols_);
  for (Index k = 0; k < rows_; ++k) {
    const double* a = row_ptr(k);
    const double* b = rhs.row_ptr(k);
    for (Index i = 0; i < cols_; ++i) {
      const double aki = a[i];
      if (aki == 0.0) continue;
      double* o = out.row_ptr(i);
      for (Index j = 0; j < rhs.cols_; ++j) o[j] += aki * b[j];
    }
  }
  return out;
}

Vector Matrix::col(Index j) const {
  Vector v(rows_);
  for (Index i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

Vector Matrix::row(Index i) const {
  return Vector(row_ptr(i), row_ptr(i) + cols_);
}

void Matrix::set_col(Index j, const Vector& v) {
  if (v.size() != rows_) throw DimensionError("set_col: length mismatch");
  for (Index i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

void Matrix::set_row(Index i, const Vector& v) {
  if (v.size() != cols_) throw DimensionError("set_row: length mismatch");
  for (Index j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (x.size() != a.cols()) throw DimensionError("matvec: length mismatch");
  Vector y(a.rows(), 0.0);
  for (Index i = 0; i < a.rows(); ++i) {
    const double* r = a.row_ptr(i);
    double s = 0.0;
    for (Index j = 0; j < a.cols(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
  if (x.size() != a.rows()) {
    throw DimensionError("matvec_transposed: length mismatch");
  }
  Vector y(a.cols(), 0.0);
  for (Index i = 0; i < a.rows(); ++i) {
    const double* r = a.row_ptr(i);
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (Index j = 0; j < a.cols(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

Matrix outer(const Vector& u, const Vector& v) {
  Matrix m(u.size(), v.size());
  for (Index i = 0; i < u.size(); ++i) {
    for (Index j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
  }
  return m;
}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

Vector axpy(double alpha, const Vector& x, const Vector& y) {
  Vector out(y);
  for (Index i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

Vector scaled(const Vector& v, double s) {
  Vector out(v);
  for (double& x : out) x *= s;
  return out;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace fedrep

#include "fedrep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedrep {
namespace {

constexpr double kOrthoTolerance = 1e-10;

// Householder reflectors of `a` (rows >= cols), computed in place.
// After the call `a` holds R in its upper triangle; `reflectors[j]` holds
// the vector v of H_j = I - 2 v v^T / (v^T v) acting on rows j..m-1.
std::vector<Vector> householder_reduce(Matrix& a) {
  const Index m = a.rows();
  const Index n = a.cols();
  std::vector<Vector> reflectors(n);
  for (Index j = 0; j < n; ++j) {
    Vector v(m - j, 0.0);
    double norm_x = 0.0;
    for (Index i = j; i < m; ++i) {
      v[i - j] = a(i, j);
      norm_x += a(i, j) * a(i, j);
    }
    norm_x = std::sqrt(norm_x);
    const double alpha = v[0] >= 0.0 ? -norm_x : norm_x;
    v[0] -= alpha;
    const double v_norm_sq = dot(v, v);
    if (v_norm_sq > 0.0) {
      for (Index col = j; col < n; ++col) {
        double proj = 0.0;
        for (Index i = j; i < m; ++i) proj += v[i - j] * a(i, col);
        const double scale = 2.0 * proj / v_norm_sq;
        for (Index i = j; i < m; ++i) a(i, col) -= scale * v[i - j];
      }
    }
    a(j, j) = alpha;
    for (Index i = j + 1; i < m; ++i) a(i, j) = 0.0;
    reflectors[j] = std::move(v);
  }
  return reflectors;
}

// Accumulates H_0 ... H_{n-1} applied to the first `q_cols` columns of I.
Matrix accumulate_q(const std::vector<Vector>& reflectors, Index m,
                    Index q_cols) {
  Matrix q(m, q_cols);
  for (Index i = 0; i < std::min(m, q_cols); ++i) q(i, i) = 1.0;
  for (Index j = reflectors.size(); j-- > 0;) {
    const Vector& v = reflectors[j];
    const double v_norm_sq = dot(v, v);
    if (v_norm_sq == 0.0) continue;
    for (Index col = 0; col < q_cols; ++col) {
      double proj = 0.0;
      for (Index i = j; i < m; ++i) proj += v[i - j] * q(i, col);
      const double scale = 2.0 * proj / v_norm_sq;
      for (Index i = j; i < m; ++i) q(i, col) -= scale * v[i - j];
    }
  }
  return q;
}

void require_full_rank(const Matrix& a, const char* who) {
  const Vector sigma = singular_values(a);
  if (sigma.front() == 0.0 || sigma.back() <= kRankTolerance * sigma.front()) {
    throw RankDeficientError(std::string(who) +
                             ": input is numerically rank deficient");
  }
}

// One-sided Jacobi: rotates column pairs of `w` until all pairs are
// orthogonal. Singular values are the final column norms. When `v` is
// non-null the right factor is accumulated into it.
void jacobi_orthogonalize(Matrix& w, Matrix* v) {
  const Index n = w.cols();
  const Index m = w.rows();
  constexpr double kEps = 1e-15;
  constexpr int kMaxSweeps = 60;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (Index i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          alpha += wp * wp;
          beta += wq * wq;
          gamma += wp * wq;
        }
        if (std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        if (v != nullptr) {
          for (Index i = 0; i < v->rows(); ++i) {
            const double vp = (*v)(i, p), vq = (*v)(i, q);
            (*v)(i, p) = c * vp - s * vq;
            (*v)(i, q) = s * vp + c * vq;
          }
        }
      }
    }
    if (!rotated) break;
  }
}

// Solves R X = rhs in place (R upper triangular p x p, rhs p x q).
void back_substitute_columns(const Matrix& r, Matrix& rhs) {
  const Index p = r.rows();
  for (Index col = 0; col < rhs.cols(); ++col) {
    for (Index i = p; i-- > 0;) {
      double s = rhs(i, col);
      for (Index j = i + 1; j < p; ++j) s -= r(i, j) * rhs(j, col);
      rhs(i, col) = s / r(i, i);
    }
  }
}

}  // namespace

OrthonormalBasis::OrthonormalBasis(Matrix m) : m_(std::move(m)) {
  if (m_.rows() < m_.cols()) {
    throw DimensionError("OrthonormalBasis: need rows >= cols");
  }
  Matrix gram = m_.gram_with(m_);
  for (Index i = 0; i < gram.rows(); ++i) gram(i, i) -= 1.0;
  if (gram.max_abs() > kOrthoTolerance) {
    throw DimensionError("OrthonormalBasis: columns are not orthonormal");
  }
}

QrResult qr_decompose(const Matrix& a) {
  if (a.rows() < a.cols()) {
    throw DimensionError("qr_decompose: need rows >= cols");
  }
  if (!a.all_finite()) throw DimensionError("qr_decompose: non-finite input");
  require_full_rank(a, "qr_decompose");

  Matrix work = a;
  const std::vector<Vector> reflectors = householder_reduce(work);
  Matrix q = accumulate_q(reflectors, a.rows(), a.cols());

  Matrix r(a.cols(), a.cols());
  for (Index i = 0; i < a.cols(); ++i) {
    for (Index j = i; j < a.cols(); ++j) r(i, j) = work(i, j);
  }
  // Sign convention: nonnegative R diagonal.
  for (Index j = 0; j < a.cols(); ++j) {
    if (r(j, j) < 0.0) {
      for (Index col = j; col < a.cols(); ++col) r(j, col) = -r(j, col);
      for (Index i = 0; i < a.rows(); ++i) q(i, j) = -q(i, j);
    }
  }
  return QrResult{OrthonormalBasis(std::move(q)), std::move(r)};
}

OrthonormalBasis orthonormalize(const Matrix& a) {
  return qr_decompose(a).q;
}

Matrix least_squares(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("least_squares: row counts differ");
  }
  if (a.rows() < a.cols()) {
    throw DimensionError("least_squares: system is underdetermined");
  }
  require_full_rank(a, "least_squares");

  // Reduce [a | b] jointly, then back-substitute against R.
  Matrix work = a;
  Matrix rhs = b;
  const Index m = a.rows();
  const Index p = a.cols();
  std::vector<Vector> reflectors = householder_reduce(work);
  for (Index j = 0; j < p; ++j) {
    const Vector& v = reflectors[j];
    const double v_norm_sq = dot(v, v);
    if (v_norm_sq == 0.0) continue;
    for (Index col = 0; col < rhs.cols(); ++col) {
      double proj = 0.0;
      for (Index i = j; i < m; ++i) proj += v[i - j] * rhs(i, col);
      const double scale = 2.0 * proj / v_norm_sq;
      for (Index i = j; i < m; ++i) rhs(i, col) -= scale * v[i - j];
    }
  }
  Matrix r(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i; j < p; ++j) r(i, j) = work(i, j);
  }
  Matrix top(p, b.cols());
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < b.cols(); ++j) top(i, j) = rhs(i, j);
  }
  back_substitute_columns(r, top);
  return top;
}

Vector least_squares(const Matrix& a, const Vector& b) {
  return least_squares(a, Matrix::column(b)).col(0);
}

Vector solve_min_norm(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) {
    throw DimensionError("solve_min_norm: length mismatch");
  }
  const SvdResult f = svd(a);
  Vector x(a.cols(), 0.0);
  const double cutoff = f.sigma.empty() ? 0.0 : kRankTolerance * f.sigma[0];
  for (Index i = 0; i < f.sigma.size(); ++i) {
    if (f.sigma[i] <= cutoff) break;
    const double coeff = dot(f.u.col(i), b) / f.sigma[i];
    for (Index j = 0; j < a.cols(); ++j) x[j] += coeff * f.v(j, i);
  }
  return x;
}

OrthonormalBasis orthonormal_complement(const OrthonormalBasis& b) {
  const Index d = b.rows();
  const Index k = b.cols();
  if (d == k) {
    throw DimensionError("orthonormal_complement: complement is empty");
  }
  Matrix work = b.matrix();
  const std::vector<Vector> reflectors = householder_reduce(work);
  const Matrix full_q = accumulate_q(reflectors, d, d);
  Matrix complement(d, d - k);
  for (Index i = 0; i < d; ++i) {
    for (Index j = k; j < d; ++j) complement(i, j - k) = full_q(i, j);
  }
  return OrthonormalBasis(std::move(complement));
}

double principal_angle_distance(const Matrix& b1, const Matrix& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols()) {
    throw DimensionError("principal_angle_distance: shape mismatch");
  }
  if (b1.rows() <= b1.cols()) {
    throw DimensionError("principal_angle_distance: need d > k");
  }
  const Matrix q1 = orthonormalize(b1).matrix();
  const Matrix q2 = orthonormalize(b2).matrix();
  // (I - Q1 Q1^T) Q2 has the same spectral norm as B1perp^T B2hat.
  const Matrix residual = q2 - q1 * q1.gram_with(q2);
  return std::clamp(spectral_norm(residual), 0.0, 1.0);
}

Vector singular_values(const Matrix& a) {
  if (!a.all_finite()) {
    throw DimensionError("singular_values: non-finite input");
  }
  Matrix w = a.rows() >= a.cols() ? a : a.transposed();
  jacobi_orthogonalize(w, nullptr);
  Vector sigma(w.cols());
  for (Index j = 0; j < w.cols(); ++j) sigma[j] = norm2(w.col(j));
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

double spectral_norm(const Matrix& a) { return singular_values(a).front(); }

SvdResult svd(const Matrix& a) {
  if (a.rows() < a.cols()) {
    SvdResult t = svd(a.transposed());
    return SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  Matrix w = a;
  Matrix v = Matrix::identity(a.cols());
  jacobi_orthogonalize(w, &v);

  const Index p = a.cols();
  std::vector<Index> order(p);
  std::iota(order.begin(), order.end(), Index{0});
  Vector norms(p);
  for (Index j = 0; j < p; ++j) norms[j] = norm2(w.col(j));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return norms[x] > norms[y]; });

  SvdResult out{Matrix(a.rows(), p), Vector(p), Matrix(a.cols(), p)};
  for (Index j = 0; j < p; ++j) {
    const Index src = order[j];
    out.sigma[j] = norms[src];
    const Vector w_col = w.col(src);
    const double inv = norms[src] > 0.0 ? 1.0 / norms[src] : 0.0;
    for (Index i = 0; i < a.rows(); ++i) out.u(i, j) = w_col[i] * inv;
    for (Index i = 0; i < a.cols(); ++i) out.v(i, j) = v(i, src);
  }
  return out;
}

Matrix rank_k_truncation(const Matrix& a, Index k) {
  const SvdResult f = svd(a);
  const Index kk = std::min<Index>(k, f.sigma.size());
  Matrix out(a.rows(), a.cols());
  for (Index t = 0; t < kk; ++t) {
    for (Index i = 0; i < a.rows(); ++i) {
      const double u_sigma = f.u(i, t) * f.sigma[t];
      for (Index j = 0; j < a.cols(); ++j) out(i, j) += u_sigma * f.v(j, t);
    }
  }
  return out;
}

}  // namespace fedrep

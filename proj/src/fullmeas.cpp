#include "fedrep/fullmeas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fedrep {
namespace {

Matrix reconstruct(const OrthonormalBasis& u, const Vector& sigma,
                   const OrthonormalBasis& v) {
  Matrix scaled_u = u.matrix();
  for (Index i = 0; i < scaled_u.rows(); ++i) {
    for (Index j = 0; j < scaled_u.cols(); ++j) scaled_u(i, j) *= sigma[j];
  }
  return scaled_u * v.matrix().transposed();
}

double loss_of(const Matrix& m, const Matrix& u_hat, const Matrix& v_hat) {
  const Matrix residual = u_hat * v_hat.transposed() - m;
  const double f = residual.frobenius_norm();
  return f * f;
}

}  // namespace

FullMeasProblem make_fullmeas_problem(Index n, Index d, Index k,
                                      std::uint64_t seed, double sigma_lo,
                                      double sigma_hi) {
  if (k < 1 || k > std::min(n, d)) {
    throw DimensionError("make_fullmeas_problem: need 1 <= k <= min(n, d)");
  }
  RandomStream stream =
      RandomStream::derive(seed, StreamPurpose::kProblemFactors);
  OrthonormalBasis u_star = orthonormalize(stream.gaussian_matrix(n, k));
  OrthonormalBasis v_star = orthonormalize(stream.gaussian_matrix(d, k));
  Vector sigma(k);
  for (double& s : sigma) s = sigma_lo + (sigma_hi - sigma_lo) * stream.next_unit();
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return fullmeas_from_factors(std::move(u_star), std::move(sigma),
                               std::move(v_star));
}

FullMeasProblem fullmeas_from_factors(OrthonormalBasis u_star,
                                      Vector sigma_star,
                                      OrthonormalBasis v_star) {
  if (u_star.cols() != sigma_star.size() ||
      v_star.cols() != sigma_star.size()) {
    throw DimensionError("fullmeas_from_factors: factor shapes disagree");
  }
  for (Index i = 0; i < sigma_star.size(); ++i) {
    if (sigma_star[i] <= 0.0 ||
        (i + 1 < sigma_star.size() && sigma_star[i] < sigma_star[i + 1])) {
      throw DimensionError(
          "fullmeas_from_factors: singular values must be positive and "
          "descending");
    }
  }
  Matrix m = reconstruct(u_star, sigma_star, v_star);
  return FullMeasProblem{std::move(m), std::move(u_star),
                         std::move(sigma_star), std::move(v_star)};
}

Matrix minimize_u(const FullMeasProblem& problem, const Matrix& v_hat) {
  if (v_hat.rows() != problem.d() || v_hat.cols() != problem.k()) {
    throw DimensionError("minimize_u: v_hat shape mismatch");
  }
  // U^T solves the least-squares system v_hat U^T ~= M^T.
  return least_squares(v_hat, problem.m_target.transposed()).transposed();
}

Matrix gradient_step_v(const FullMeasProblem& problem, const Matrix& u_hat,
                       const Matrix& v_hat, double eta) {
  const Matrix residual = u_hat * v_hat.transposed() - problem.m_target;
  const Matrix gradient = residual.transposed() * u_hat;  // d x k
  return v_hat - gradient.scaled(eta);
}

double theorem_step_size(const FullMeasProblem& problem, const Matrix& r0) {
  const Vector sigma_r = singular_values(r0);
  if (sigma_r.back() <= kRankTolerance * sigma_r.front()) {
    throw RankDeficientError("theorem_step_size: R0 is singular");
  }
  const double smin = sigma_r.back();
  const double smax = sigma_r.front();
  const double star_min = problem.sigma_star_min();
  const double star_max = problem.sigma_star_max();
  return 0.5 * (smin * smin * smin / smax) * (star_min * star_min) /
         (star_max * star_max * star_max * star_max);
}

Matrix default_v0(const FullMeasProblem& problem, std::uint64_t seed) {
  RandomStream stream =
      RandomStream::derive(seed, StreamPurpose::kInitRepresentation);
  return orthonormalize(stream.gaussian_matrix(problem.d(), problem.k()))
      .matrix();
}

FullMeasTrace run_fullmeas(const FullMeasProblem& problem, const Matrix& v0,
                           double eta, Index rounds) {
  if (eta <= 0.0) throw ConfigError("run_fullmeas: eta must be positive");
  const Index d = problem.d();
  const Index k = problem.k();
  if (v0.rows() != d || v0.cols() != k) {
    throw DimensionError("run_fullmeas: v0 shape mismatch");
  }

  FullMeasTrace trace;
  trace.eta = eta;
  const double m_fro = problem.m_target.frobenius_norm();
  trace.m_frobenius_sq = m_fro * m_fro;

  Matrix v_hat = v0;
  Matrix prev_gram;          // V_t^T V_t of the previous round
  Matrix prev_r_gram;        // R_t^T R_t of the previous round
  Matrix prev_step_gram;     // eta^2 S_t^T S_t of the previous round
  double prev_dist = std::numeric_limits<double>::quiet_NaN();
  double initial_loss = 0.0;

  for (Index t = 0; t <= rounds; ++t) {
    const QrResult qr = qr_decompose(v_hat);  // throws when rank collapses
    const Vector sigma_r = singular_values(qr.r);
    if (t == 0) {
      trace.sigma_min_r0 = sigma_r.back();
      trace.sigma_max_r0 = sigma_r.front();
      trace.rate_bound =
          1.0 - eta * problem.sigma_star_min() * problem.sigma_star_min() /
                    (2.0 * trace.sigma_max_r0 * trace.sigma_max_r0);
    }

    const Matrix u_hat = minimize_u(problem, v_hat);

    FullMeasRound rec;
    rec.round = t;
    rec.loss = loss_of(problem.m_target, u_hat, v_hat);
    rec.dist = d == k ? 0.0 : principal_angle_distance(v_hat, problem.v_star.matrix());
    rec.sigma_min_r = sigma_r.back();
    rec.sigma_max_r = sigma_r.front();
    rec.contraction_ratio = rec.dist / prev_dist;

    if (!std::isfinite(rec.loss)) {
      throw DivergedError("run_fullmeas: non-finite loss");
    }
    if (t == 0) {
      initial_loss = rec.loss;
    } else if (rec.loss > 1e6 * initial_loss && rec.loss > 1e-6) {
      throw DivergedError("run_fullmeas: loss exceeded divergence guard");
    }

    const Matrix gram = v_hat.gram_with(v_hat);
    const Matrix r_gram = qr.r.gram_with(qr.r);
    if (t > 0) {
      rec.r_recursion_err = (r_gram - (prev_r_gram + prev_step_gram)).max_abs();
      rec.cross_term_err = (gram - (prev_gram + prev_step_gram)).max_abs();
    }

    if (t < rounds) {
      const Matrix residual = u_hat * v_hat.transposed() - problem.m_target;
      const Matrix step = residual.transposed() * u_hat;  // S_t, d x k
      rec.grad_norm = spectral_norm(step);
      prev_step_gram = step.gram_with(step).scaled(eta * eta);
      v_hat = v_hat - step.scaled(eta);
      if (!v_hat.all_finite() || v_hat.max_abs() > 1e150) {
        throw DivergedError("run_fullmeas: iterate magnitude blew up");
      }
    }
    prev_gram = gram;
    prev_r_gram = r_gram;
    prev_dist = rec.dist;
    trace.rounds.push_back(rec);
  }
  return trace;
}

double FullMeasTrace::loss_bound(Index t) const {
  return std::pow(rate_bound, static_cast<double>(t)) * m_frobenius_sq *
         (sigma_max_r0 / sigma_min_r0);
}

}  // namespace fedrep

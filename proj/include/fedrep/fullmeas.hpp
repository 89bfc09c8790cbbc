#pragma once

#include <cstdint>

#include "fedrep/linalg.hpp"
#include "fedrep/rng.hpp"

namespace fedrep {

/// Rank-k target M = U* diag(sigma*) V*^T observed in full, together with
/// its planted factors so spectral quantities are exact.
struct FullMeasProblem {
  Matrix m_target;          // n x d
  OrthonormalBasis u_star;  // n x k
  Vector sigma_star;        // k, descending, all > 0
  OrthonormalBasis v_star;  // d x k

  Index n() const { return m_target.rows(); }
  Index d() const { return m_target.cols(); }
  Index k() const { return sigma_star.size(); }
  double sigma_star_min() const { return sigma_star.back(); }
  double sigma_star_max() const { return sigma_star.front(); }
};

/// Random planted instance; singular values drawn uniformly in
/// [sigma_lo, sigma_hi] and sorted.
FullMeasProblem make_fullmeas_problem(Index n, Index d, Index k,
                                      std::uint64_t seed,
                                      double sigma_lo = 1.0,
                                      double sigma_hi = 2.0);

/// Instance from explicit factors (validates the reconstruction).
FullMeasProblem fullmeas_from_factors(OrthonormalBasis u_star,
                                      Vector sigma_star,
                                      OrthonormalBasis v_star);

/// Per-round trace record. `loss` pairs the freshly minimized U with the
/// pre-step V: ||M - U_{t+1} V_t^T||_F^2. The *_err fields measure the
/// exact identities the update is supposed to satisfy and are kept for
/// verification; they do not feed back into the iteration.
struct FullMeasRound {
  Index round = 0;
  double loss = 0.0;
  double dist = 0.0;  // principal angle distance of V_t to V*
  double sigma_min_r = 0.0;
  double sigma_max_r = 0.0;
  double grad_norm = 0.0;          // ||S_t||_2
  double contraction_ratio = 0.0;  // dist_t / dist_{t-1}; NaN at round 0
  double r_recursion_err = 0.0;    // ||R_t^T R_t - R_{t-1}^T R_{t-1} - eta^2 S^T S||_max
  double cross_term_err = 0.0;     // same identity on V^T V directly
};

struct FullMeasTrace {
  std::vector<FullMeasRound> rounds;
  double eta = 0.0;
  double rate_bound = 0.0;  // 1 - eta sigma*_min^2 / (2 sigma_max^2(R_0))
  double sigma_min_r0 = 0.0;
  double sigma_max_r0 = 0.0;
  double m_frobenius_sq = 0.0;

  double final_loss() const { return rounds.back().loss; }
  /// Loss bound after T full iterations:
  /// rate^T * ||M||_F^2 * sigma_max(R_0) / sigma_min(R_0).
  double loss_bound(Index t) const;
};

/// argmin_U ||U v_hat^T - M||_F = M v_hat (v_hat^T v_hat)^{-1}.
Matrix minimize_u(const FullMeasProblem& problem, const Matrix& v_hat);

/// One descent step on V: v_hat - eta * (u_hat v_hat^T - M)^T u_hat.
Matrix gradient_step_v(const FullMeasProblem& problem, const Matrix& u_hat,
                       const Matrix& v_hat, double eta);

/// Largest admissible step size:
/// (1/2) sigma_min^3(R0)/sigma_max(R0) * sigma*_min^2/sigma*_max^4.
double theorem_step_size(const FullMeasProblem& problem, const Matrix& r0);

/// Random orthonormal d x k start (so R_0 = I).
Matrix default_v0(const FullMeasProblem& problem, std::uint64_t seed);

/// Alternates exact U-minimization with one V gradient step for `rounds`
/// iterations, then one final U-minimization. rounds+1 records.
/// Throws DivergedError when the loss turns non-finite or exceeds
/// 1e6 x the initial loss.
FullMeasTrace run_fullmeas(const FullMeasProblem& problem, const Matrix& v0,
                           double eta, Index rounds);

}  // namespace fedrep

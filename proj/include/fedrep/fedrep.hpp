#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedrep/synthetic.hpp"

namespace fedrep {

enum class DataMode { kFresh, kFixed };
enum class GradMode { kEmpirical, kPopulation };
enum class InitMode { kRandom, kSpectral };

/// Subspace distances below this are machine-precision noise; per-round
/// contraction ratios are not judged past it.
inline constexpr double kConvergenceFloor = 1e-13;

/// Round-based federated simulation parameters. `eta <= 0` selects the
/// largest admissible step 1/(4 sigma_max^2) from the subset spectral
/// bounds; a larger explicit eta still runs but is flagged in the trace.
struct FedConfig {
  Index n = 100;
  Index d = 10;
  Index k = 2;
  Index m = 5;
  double r = 0.1;
  double eta = 0.0;
  Index rounds = 100;
  std::uint64_t seed = 1;
  double noise_var = 1e-3;
  bool ortho = false;
  DataMode data_mode = DataMode::kFresh;
  GradMode grad_mode = GradMode::kEmpirical;
  InitMode init = InitMode::kRandom;
  Index init_steps = 10;  // projected-gradient rounds for spectral init
  unsigned threads = 0;   // 0: FEDREP_LAB_THREADS env var, else 1

  Index participants_per_round() const;
  void validate() const;
};

/// Shared representation plus every client's persisted head. Heads of
/// clients that skip a round are carried over untouched.
struct FedState {
  Matrix b;      // d x k
  Matrix heads;  // n x k
  Index round = 0;
};

struct FedRound {
  Index round = 0;
  double dist = 0.0;
  double pop_loss = 0.0;
  double emp_loss = 0.0;
  double sigma_min_sub = 0.0;
  double sigma_max_sub = 0.0;
  double rate_bound = 0.0;
  double f_norm = 0.0;
  Index participants = 0;
};

struct FedTrace {
  std::vector<FedRound> rounds;  // rounds+1 records; last has no sampling
  double dist0 = 0.0;
  double e0 = 0.0;  // 1 - dist0^2
  double eta = 0.0;
  double rate_bound = 0.0;  // sqrt(1 - eta e0 sigma_min^2 / 2)
  SpectralBounds bounds;
  std::vector<std::string> warnings;
  Matrix final_b;      // post-training representation
  Matrix final_heads;  // post-training heads, n x k

  double final_dist() const { return rounds.back().dist; }
};

/// Head update rule: tau == 0 runs the exact least-squares argmin,
/// otherwise tau gradient steps from the carried head with step `alpha`.
/// A negative alpha selects 1/L from the batch Gram; alpha == 0 is honored
/// literally (frozen heads).
struct HeadPolicy {
  Index tau = 0;
  double alpha = -1.0;
};

/// Starting representation. Random mode orthonormalizes a Gaussian draw.
/// Spectral mode runs `init_steps` projected-gradient iterations on the
/// unfactorized objective over the stacked n x d regressor matrix, with a
/// rank-k truncation each step, and returns the top-k right singular
/// vectors of the estimate.
Matrix init_representation(const GroundTruth& gt, const FedConfig& config);

/// argmin_w of the batch loss (1/2m) sum_j (y_j - w^T b^T x_j)^2.
Vector client_head_update(const Matrix& b, const SampleBatch& batch);

/// Batch gradient of the same loss with respect to the representation:
/// (1/m) X^T (X b w - y) w^T.
Matrix client_rep_gradient(const Matrix& b, const Vector& w,
                           const SampleBatch& batch);

/// Infinite-sample limit of the client update: the population argmin head
/// (b^T b)^{-1} b^T B* w_i* and the population gradient (b w - B* w_i*) w^T.
std::pair<Vector, Matrix> population_head_and_gradient(
    const Matrix& b, const GroundTruth& gt, Index client_id);

/// One communication round: sample ceil(r n) clients, update their heads,
/// take the averaged representation gradient step, optionally
/// re-orthonormalize. Returns the round record (distance measured at the
/// pre-step representation).
FedRound server_round(FedState& state, const GroundTruth& gt,
                      const FedConfig& config);
FedRound server_round_with_policy(FedState& state, const GroundTruth& gt,
                                  const FedConfig& config,
                                  const HeadPolicy& policy);

FedTrace run_fedrep(const GroundTruth& gt, const FedConfig& config);
FedTrace run_fedrep_with_policy(const GroundTruth& gt, const FedConfig& config,
                                const HeadPolicy& policy);

/// Frobenius norm of heads - W*_subset B*^T b_hat: the residual between
/// the heads actually solved for against b_hat and their infinite-sample
/// values. Vanishes in population mode and shrinks like 1/sqrt(m).
double residual_f_diagnostic(const OrthonormalBasis& b_hat,
                             const Matrix& heads_matrix, const GroundTruth& gt,
                             const std::vector<Index>& subset);

/// (1/2n) sum_i min_w ||B w - B* w_i*||^2: population objective at the
/// per-client optimal heads, zero exactly when span(B) = span(B*).
double population_loss(const Matrix& b, const GroundTruth& gt);

/// Worker cap: explicit value, else FEDREP_LAB_THREADS, else 1.
unsigned resolve_thread_count(unsigned configured);

}  // namespace fedrep

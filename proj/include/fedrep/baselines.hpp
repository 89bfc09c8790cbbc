#pragma once

#include "fedrep/fedrep.hpp"

namespace fedrep {

enum class BaselineAlgo { kGdGd, kTenGdGd, kLocalOnly, kGlobalModel };

struct NewClientReport {
  Index m_new = 0;
  double mse_fedrep = 0.0;
  double mse_fedavg_style = 0.0;
  double mse_local = 0.0;
};

/// One round where the head takes tau gradient steps from its carried
/// value instead of the exact argmin; the representation step is the same
/// as in server_round. A negative alpha picks 1/L from the batch Gram.
FedRound gdgd_round(FedState& state, const GroundTruth& gt,
                    const FedConfig& config, Index tau, double alpha);

FedTrace run_gdgd(const GroundTruth& gt, const FedConfig& config, Index tau,
                  double alpha = -1.0);

/// Minimum-norm least-squares fit of a single client's stacked batches:
/// ordinary least squares once the sample count reaches d, the min-norm
/// interpolant below that.
Vector local_only_fit(const std::vector<SampleBatch>& batches);

/// Population minimizer of the single-model objective
/// min_{B, w} (1/2n) sum_i ||B w - B* w_i*||^2: any pair whose product is
/// B* wbar*. Returns the canonical representative (B*, wbar*).
std::pair<Matrix, Vector> global_model_fit(const GroundTruth& gt);

/// Its objective value in closed form: (1/2n) sum_i ||wbar* - w_i*||^2
/// (B* orthonormal makes the inner product collapse).
double global_model_error(const GroundTruth& gt);

/// Draws a brand-new client (fresh head of norm sqrt(k), same B*), fits a
/// head on m_new samples against b_learned plus a full-dimensional
/// local-only model on the same samples, and evaluates everything on a
/// noiseless held-out test set. The single-model comparison point is the
/// population global model.
NewClientReport new_client_eval(const Matrix& b_learned, const GroundTruth& gt,
                                Index m_new, double noise_var,
                                std::uint64_t seed, Index test_size = 10000);

}  // namespace fedrep

#pragma once

#include <cstdint>
#include <string>

#include "fedrep/linalg.hpp"
#include "fedrep/rng.hpp"

namespace fedrep {

/// Planted ground truth shared by all client distributions: a d x k
/// orthonormal representation and one k-dimensional head per client,
/// every head rescaled to norm sqrt(k).
struct GroundTruth {
  Matrix w_star;            // n x k, row i is client i's head
  OrthonormalBasis b_star;  // d x k
  Index n = 0;
  Index d = 0;
  Index k = 0;
  std::uint64_t seed = 0;

  /// B* w_i*, the full-dimensional regressor of client i.
  Vector client_regressor(Index client_id) const;
};

/// One client's regression batch: y = X B* w_i* + noise.
struct SampleBatch {
  Index client_id = 0;
  Matrix x;  // m x d
  Vector y;  // m
  double noise_var = 0.0;
};

/// Extreme singular values of (1/sqrt(rn)) W*_subset over rn-row subsets.
/// `exact` marks exhaustive enumeration; otherwise the full-participation
/// value stands in as a proxy.
struct SpectralBounds {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool exact = false;
};

/// Exhaustive subset search is attempted only below this subset budget.
inline constexpr std::uint64_t kSubsetBudget = 10000;

GroundTruth generate_ground_truth(Index n, Index d, Index k,
                                  std::uint64_t seed);

/// Fresh i.i.d. standard normal covariates with optional Gaussian label
/// noise. The stream is keyed on (seed, client_id, counter): pass the
/// round index as `counter` for fresh-per-round batches, or a constant
/// to reuse one batch across rounds.
SampleBatch sample_batch(const GroundTruth& gt, Index client_id, Index m,
                         double noise_var, std::uint64_t seed,
                         std::uint64_t counter = 0,
                         StreamPurpose purpose = StreamPurpose::kBatch);

SpectralBounds spectral_bounds(const GroundTruth& gt, Index rn);

/// Text fixture format: magic/version header, (n, d, k, seed), then
/// row-major W* and B* printed with enough digits to round-trip exactly.
void export_ground_truth(const GroundTruth& gt, const std::string& path);
GroundTruth import_ground_truth(const std::string& path);

}  // namespace fedrep

#pragma once

#include <cstdint>

#include "fedrep/matrix.hpp"

namespace fedrep {

/// Purpose tags keep independently derived substreams from colliding.
enum class StreamPurpose : std::uint64_t {
  kGroundTruthHeads = 1,
  kGroundTruthBasis = 2,
  kBatch = 3,
  kInitBatch = 4,
  kClientSampling = 5,
  kInitRepresentation = 6,
  kNewClient = 7,
  kTestSet = 8,
  kProblemFactors = 9,
};

/// Counter-based deterministic random stream (splitmix64 core). Substreams
/// are derived by hashing (seed, purpose, id, counter), so per-client work
/// can run on any number of threads in any order and still reproduce the
/// exact same draws.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t state) : state_(state) {}

  static RandomStream derive(std::uint64_t seed, StreamPurpose purpose,
                             std::uint64_t id = 0, std::uint64_t counter = 0);

  std::uint64_t next_u64();

  /// Uniform double strictly inside (0, 1).
  double next_unit();

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double next_gaussian();

  /// Uniform integer in [0, bound), bound >= 1. Fixed-point multiply keeps
  /// the draw count per call at exactly one.
  std::uint64_t next_below(std::uint64_t bound);

  Vector gaussian_vector(Index n);
  Matrix gaussian_matrix(Index rows, Index cols);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fedrep

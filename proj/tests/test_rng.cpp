#include <doctest.h>

#include <cmath>

#include "fedrep/rng.hpp"

using namespace fedrep;

TEST_CASE("derived streams are reproducible and keyed") {
  RandomStream a = RandomStream::derive(42, StreamPurpose::kBatch, 3, 7);
  RandomStream b = RandomStream::derive(42, StreamPurpose::kBatch, 3, 7);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  RandomStream other_counter = RandomStream::derive(42, StreamPurpose::kBatch, 3, 8);
  RandomStream other_id = RandomStream::derive(42, StreamPurpose::kBatch, 4, 7);
  RandomStream other_purpose =
      RandomStream::derive(42, StreamPurpose::kInitBatch, 3, 7);
  RandomStream reference = RandomStream::derive(42, StreamPurpose::kBatch, 3, 7);
  const std::uint64_t head = reference.next_u64();
  CHECK(other_counter.next_u64() != head);
  CHECK(other_id.next_u64() != head);
  CHECK(other_purpose.next_u64() != head);
}

TEST_CASE("gaussians look standard normal") {
  RandomStream stream = RandomStream::derive(7, StreamPurpose::kTestSet);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = stream.next_gaussian();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("unit draws stay strictly inside (0,1)") {
  RandomStream stream = RandomStream::derive(9, StreamPurpose::kTestSet);
  for (int i = 0; i < 10000; ++i) {
    const double u = stream.next_unit();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("bounded draws respect the bound") {
  RandomStream stream = RandomStream::derive(11, StreamPurpose::kClientSampling);
  bool saw_low = false, saw_high = false;
  for (int i = 0; i < 4000; ++i) {
    const std::uint64_t v = stream.next_below(7);
    CHECK(v < 7);
    saw_low = saw_low || v == 0;
    saw_high = saw_high || v == 6;
  }
  CHECK(saw_low);
  CHECK(saw_high);
}

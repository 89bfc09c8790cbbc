#include "fedrep/rng.hpp"

#include <cmath>
#include <numbers>

namespace fedrep {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t acc, std::uint64_t word) {
  acc ^= word + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2);
  std::uint64_t s = acc;
  return splitmix64(s);
}

}  // namespace

RandomStream RandomStream::derive(std::uint64_t seed, StreamPurpose purpose,
                                  std::uint64_t id, std::uint64_t counter) {
  std::uint64_t acc = mix(seed, static_cast<std::uint64_t>(purpose));
  acc = mix(acc, id);
  acc = mix(acc, counter);
  return RandomStream(acc);
}

std::uint64_t RandomStream::next_u64() { return splitmix64(state_); }

double RandomStream::next_unit() {
  // 53-bit mantissa, offset by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RandomStream::next_below(std::uint64_t bound) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
}

Vector RandomStream::gaussian_vector(Index n) {
  Vector v(n);
  for (double& x : v) x = next_gaussian();
  return v;
}

Matrix RandomStream::gaussian_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = next_gaussian();
  return m;
}

}  // namespace fedrep

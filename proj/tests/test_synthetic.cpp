#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fedrep/synthetic.hpp"

using namespace fedrep;

namespace {

// Singular values of a 2-column matrix through the closed-form 2x2
// symmetric eigenproblem; independent of the Jacobi path.
std::pair<double, double> two_col_singular_values(const Matrix& a) {
  const Matrix g = a.gram_with(a);
  const double tr = g(0, 0) + g(1, 1);
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return {std::sqrt(tr / 2.0 + disc), std::sqrt(std::max(0.0, tr / 2.0 - disc))};
}

}  // namespace

TEST_CASE("ground truth satisfies the normalization assumptions") {
  const GroundTruth gt = generate_ground_truth(12, 7, 3, 99);
  const double root_k = std::sqrt(3.0);
  for (Index i = 0; i < gt.n; ++i) {
    CHECK(norm2(gt.w_star.row(i)) == doctest::Approx(root_k).epsilon(1e-10));
  }
  Matrix gram = gt.b_star.matrix().gram_with(gt.b_star.matrix());
  for (Index i = 0; i < 3; ++i) gram(i, i) -= 1.0;
  CHECK(gram.max_abs() <= 1e-10);

  // Heads span all of R^k.
  const Vector sigma = singular_values(gt.w_star);
  CHECK(sigma.back() > 1e-6);

  CHECK_THROWS_AS(generate_ground_truth(3, 7, 3, 1), DimensionError);
}

TEST_CASE("ground truth is a pure function of the seed") {
  const GroundTruth a = generate_ground_truth(9, 6, 2, 4);
  const GroundTruth b = generate_ground_truth(9, 6, 2, 4);
  CHECK(a.w_star.data() == b.w_star.data());
  CHECK(a.b_star.matrix().data() == b.b_star.matrix().data());
  const GroundTruth c = generate_ground_truth(9, 6, 2, 5);
  CHECK(a.w_star.data() != c.w_star.data());
}

TEST_CASE("row-wise incoherence holds with constant one") {
  const GroundTruth gt = generate_ground_truth(20, 9, 2, 7);
  const Matrix product = gt.w_star * gt.b_star.matrix().transposed();
  double max_row = 0.0;
  for (Index i = 0; i < product.rows(); ++i) {
    max_row = std::max(max_row, norm2(product.row(i)));
  }
  const double ratio =
      max_row * std::sqrt(static_cast<double>(gt.n)) / product.frobenius_norm();
  CHECK(ratio <= 1.0 + 1e-10);
}

TEST_CASE("noiseless batches reproduce the planted model exactly") {
  const GroundTruth gt = generate_ground_truth(5, 6, 2, 11);
  const SampleBatch batch = sample_batch(gt, 2, 9, 0.0, 11, 0);
  const Vector regressor = gt.client_regressor(2);
  for (Index j = 0; j < batch.y.size(); ++j) {
    CHECK(std::abs(batch.y[j] - dot(batch.x.row(j), regressor)) <= 1e-12);
  }
}

TEST_CASE("batches are keyed by seed, client and counter") {
  const GroundTruth gt = generate_ground_truth(5, 6, 2, 11);
  const SampleBatch a = sample_batch(gt, 1, 4, 1e-3, 11, 0);
  const SampleBatch b = sample_batch(gt, 1, 4, 1e-3, 11, 0);
  CHECK(a.x.data() == b.x.data());
  CHECK(a.y == b.y);
  const SampleBatch fresh = sample_batch(gt, 1, 4, 1e-3, 11, 1);
  CHECK(a.x.data() != fresh.x.data());
  const SampleBatch other = sample_batch(gt, 2, 4, 1e-3, 11, 0);
  CHECK(a.x.data() != other.x.data());
}

TEST_CASE("label noise has roughly the configured variance") {
  const GroundTruth gt = generate_ground_truth(4, 5, 2, 13);
  const double noise_var = 1e-3;
  const SampleBatch noisy = sample_batch(gt, 0, 20000, noise_var, 13, 0);
  const Vector regressor = gt.client_regressor(0);
  double sum_sq = 0.0;
  for (Index j = 0; j < noisy.y.size(); ++j) {
    const double eps = noisy.y[j] - dot(noisy.x.row(j), regressor);
    sum_sq += eps * eps;
  }
  const double measured = sum_sq / static_cast<double>(noisy.y.size());
  CHECK(measured == doctest::Approx(noise_var).epsilon(0.05));
}

TEST_CASE("covariates have identity covariance at scale") {
  const GroundTruth gt = generate_ground_truth(4, 8, 2, 17);
  const SampleBatch batch = sample_batch(gt, 0, 100000, 0.0, 17, 0);
  const Matrix second_moment =
      batch.x.gram_with(batch.x).scaled(1.0 / 100000.0);
  double worst = 0.0;
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 8; ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(second_moment(i, j) - expected));
    }
  }
  CHECK(worst <= 5e-2);
}

TEST_CASE("spectral bounds: hand case and exhaustive oracle") {
  // Two clients with heads +1 and -1 in one dimension.
  Matrix w(2, 1);
  w(0, 0) = 1.0;
  w(1, 0) = -1.0;
  Matrix e1(2, 1);
  e1(0, 0) = 1.0;
  const GroundTruth hand{w, OrthonormalBasis(e1), 2, 2, 1, 0};
  const SpectralBounds both = spectral_bounds(hand, 2);
  CHECK(both.exact);
  CHECK(both.sigma_min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(both.sigma_max == doctest::Approx(1.0).epsilon(1e-12));

  // n = 4, k = 2, rn = 2: compare against the brute-force walk over all
  // six pairs with the closed-form 2x2 singular values.
  const GroundTruth gt = generate_ground_truth(4, 6, 2, 23);
  const SpectralBounds bounds = spectral_bounds(gt, 2);
  CHECK(bounds.exact);
  double lo = 1e300, hi = 0.0;
  for (Index i = 0; i < 4; ++i) {
    for (Index j = i + 1; j < 4; ++j) {
      Matrix pair(2, 2);
      pair.set_row(0, gt.w_star.row(i));
      pair.set_row(1, gt.w_star.row(j));
      const auto [s_hi, s_lo] =
          two_col_singular_values(pair.scaled(1.0 / std::sqrt(2.0)));
      lo = std::min(lo, s_lo);
      hi = std::max(hi, s_hi);
    }
  }
  CHECK(bounds.sigma_min == doctest::Approx(lo).epsilon(1e-10));
  CHECK(bounds.sigma_max == doctest::Approx(hi).epsilon(1e-10));

  // Full participation has exactly one subset.
  const SpectralBounds full = spectral_bounds(gt, 4);
  CHECK(full.exact);
  const Vector sigma = singular_values(gt.w_star.scaled(0.5));
  CHECK(full.sigma_min == doctest::Approx(sigma.back()).epsilon(1e-12));
  CHECK(full.sigma_max == doctest::Approx(sigma.front()).epsilon(1e-12));

  // Subset minimum sits below the full-participation value rescaled.
  const double proxy_min =
      singular_values(gt.w_star.scaled(0.5)).back() * std::sqrt(4.0 / 2.0);
  CHECK(bounds.sigma_min <= proxy_min + 1e-12);
}

TEST_CASE("spectral bounds fall back to the proxy above the budget") {
  const GroundTruth gt = generate_ground_truth(60, 8, 2, 29);
  const SpectralBounds proxy = spectral_bounds(gt, 30);  // C(60,30) is huge
  CHECK_FALSE(proxy.exact);
  const Vector sigma =
      singular_values(gt.w_star.scaled(1.0 / std::sqrt(60.0)));
  CHECK(proxy.sigma_min == doctest::Approx(sigma.back()).epsilon(1e-12));
  CHECK(proxy.sigma_max == doctest::Approx(sigma.front()).epsilon(1e-12));
}

TEST_CASE("ground truth round-trips through the fixture file bit-exactly") {
  const GroundTruth gt = generate_ground_truth(7, 5, 2, 31);
  const std::string path =
      (std::filesystem::temp_directory_path() / "fedrep_gt_fixture.txt")
          .string();
  export_ground_truth(gt, path);
  const GroundTruth loaded = import_ground_truth(path);
  CHECK(loaded.n == gt.n);
  CHECK(loaded.d == gt.d);
  CHECK(loaded.k == gt.k);
  CHECK(loaded.seed == gt.seed);
  CHECK(loaded.w_star.data() == gt.w_star.data());
  CHECK(loaded.b_star.matrix().data() == gt.b_star.matrix().data());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(import_ground_truth("/nonexistent/path/gt.txt"), ConfigError);
}

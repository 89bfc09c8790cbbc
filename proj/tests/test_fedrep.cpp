#include <doctest.h>

#include <cmath>

#include "fedrep/fedrep.hpp"

using namespace fedrep;

namespace {

FedConfig small_population_config(Index n, Index d, Index k,
                                  std::uint64_t seed) {
  FedConfig config;
  config.n = n;
  config.d = d;
  config.k = k;
  config.m = 5;
  config.r = 1.0;
  config.noise_var = 0.0;
  config.grad_mode = GradMode::kPopulation;
  config.rounds = 40;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("participant count guards the fractional ceiling") {
  FedConfig config;
  config.n = 100;
  config.r = 0.1;
  CHECK(config.participants_per_round() == 10);
  config.r = 1.0;
  CHECK(config.participants_per_round() == 100);
  config.r = 0.001;
  CHECK(config.participants_per_round() == 1);
  config.n = 30;
  config.r = 0.1;  // ceil(3.0000...)
  CHECK(config.participants_per_round() == 3);
}

TEST_CASE("random init is orthonormal and seed-deterministic") {
  const GroundTruth gt = generate_ground_truth(10, 8, 2, 3);
  FedConfig config = small_population_config(10, 8, 2, 3);
  const Matrix b0 = init_representation(gt, config);
  Matrix gram = b0.gram_with(b0);
  for (Index i = 0; i < 2; ++i) gram(i, i) -= 1.0;
  CHECK(gram.max_abs() <= 1e-10);
  CHECK(init_representation(gt, config).data() == b0.data());
}

TEST_CASE("spectral init beats random init on average") {
  // Noiseless, n*m well above the identifiable threshold.
  double spectral_total = 0.0;
  double random_total = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GroundTruth gt = generate_ground_truth(100, 10, 2, seed);
    FedConfig config = small_population_config(100, 10, 2, seed);
    config.m = 20;
    config.noise_var = 0.0;
    config.init = InitMode::kSpectral;
    const Matrix spectral = init_representation(gt, config);
    config.init = InitMode::kRandom;
    const Matrix random_b = init_representation(gt, config);
    spectral_total += principal_angle_distance(spectral, gt.b_star.matrix());
    random_total += principal_angle_distance(random_b, gt.b_star.matrix());
  }
  CHECK(spectral_total / 20.0 < random_total / 20.0);
}

TEST_CASE("head update recovers planted heads and hand case") {
  const GroundTruth gt = generate_ground_truth(6, 7, 2, 5);
  const SampleBatch batch = sample_batch(gt, 3, 10, 0.0, 5, 0);
  const Vector head = client_head_update(gt.b_star.matrix(), batch);
  const Vector truth = gt.w_star.row(3);
  for (Index j = 0; j < 2; ++j) {
    CHECK(std::abs(head[j] - truth[j]) <= 1e-8);
  }

  // d=2, k=1, b = e1: samples (1,0)->3 and (0,1)->0 give w = 3.
  Matrix e1(2, 1);
  e1(0, 0) = 1.0;
  Matrix x(2, 2);
  x(0, 0) = 1.0;
  x(1, 1) = 1.0;
  const SampleBatch hand{0, x, Vector{3.0, 0.0}, 0.0};
  const Vector w = client_head_update(e1, hand);
  CHECK(w[0] == doctest::Approx(3.0).epsilon(1e-12));

  // Batch smaller than the head is underdetermined.
  Matrix one_row(1, 2);
  one_row(0, 0) = 1.0;
  one_row(0, 1) = 1.0;
  const SampleBatch tiny{0, one_row, Vector{1.0}, 0.0};
  CHECK_THROWS_AS(client_head_update(gt.b_star.matrix(), tiny),
                  RankDeficientError);
}

TEST_CASE("head update zeroes the head gradient") {
  const GroundTruth gt = generate_ground_truth(6, 7, 2, 7);
  const SampleBatch batch = sample_batch(gt, 1, 9, 1e-3, 7, 2);
  RandomStream stream = RandomStream::derive(7, StreamPurpose::kTestSet);
  const Matrix b = stream.gaussian_matrix(7, 2);
  const Vector w = client_head_update(b, batch);
  const Matrix xb = batch.x * b;
  Vector residual = matvec(xb, w);
  for (Index j = 0; j < residual.size(); ++j) residual[j] -= batch.y[j];
  const Vector gradient =
      scaled(matvec_transposed(xb, residual), 1.0 / 9.0);
  CHECK(norm2(gradient) <= 1e-8);
}

TEST_CASE("representation gradient vanishes where it should") {
  const GroundTruth gt = generate_ground_truth(5, 6, 2, 9);
  const SampleBatch batch = sample_batch(gt, 0, 8, 0.0, 9, 0);
  RandomStream stream = RandomStream::derive(9, StreamPurpose::kTestSet);
  const Matrix b = stream.gaussian_matrix(6, 2);

  const Matrix at_zero = client_rep_gradient(b, Vector{0.0, 0.0}, batch);
  CHECK(at_zero.max_abs() == 0.0);

  // Zero-residual batch: labels manufactured from (b, w) exactly.
  const Vector w{0.4, -1.2};
  SampleBatch aligned = batch;
  aligned.y = matvec(aligned.x, matvec(b, w));
  CHECK(client_rep_gradient(b, w, aligned).max_abs() <= 1e-12);
}

TEST_CASE("population head and gradient: exact cases and empirical limit") {
  const GroundTruth gt = generate_ground_truth(6, 7, 2, 11);
  auto [w_star_fit, grad_at_truth] =
      population_head_and_gradient(gt.b_star.matrix(), gt, 2);
  const Vector truth = gt.w_star.row(2);
  for (Index j = 0; j < 2; ++j) {
    CHECK(w_star_fit[j] == doctest::Approx(truth[j]).epsilon(1e-10));
  }
  CHECK(grad_at_truth.max_abs() <= 1e-10);

  // Orthonormal b: the population head is b^T B* w*.
  RandomStream stream = RandomStream::derive(11, StreamPurpose::kTestSet);
  const Matrix b = orthonormalize(stream.gaussian_matrix(7, 2)).matrix();
  const auto [w_pop, grad_pop] = population_head_and_gradient(b, gt, 0);
  const Vector expected = matvec_transposed(b, gt.client_regressor(0));
  for (Index j = 0; j < 2; ++j) {
    CHECK(w_pop[j] == doctest::Approx(expected[j]).epsilon(1e-10));
  }

  // Large-batch empirical head converges to the population head.
  const SampleBatch big = sample_batch(gt, 0, 100000, 0.0, 11, 0);
  const Vector w_emp = client_head_update(b, big);
  for (Index j = 0; j < 2; ++j) {
    CHECK(std::abs(w_emp[j] - w_pop[j]) <= 1e-2);
  }
}

TEST_CASE("population loss is zero exactly on the planted span") {
  const GroundTruth gt = generate_ground_truth(8, 6, 2, 13);
  CHECK(population_loss(gt.b_star.matrix(), gt) <= 1e-20);
  Matrix rotated = gt.b_star.matrix();
  Matrix mixer(2, 2);
  mixer(0, 0) = 2.0;
  mixer(0, 1) = 1.0;
  mixer(1, 1) = -0.5;
  CHECK(population_loss(rotated * mixer, gt) <= 1e-18);
  RandomStream stream = RandomStream::derive(13, StreamPurpose::kTestSet);
  CHECK(population_loss(stream.gaussian_matrix(6, 2), gt) > 1e-3);
}

TEST_CASE("single-client population round equals the centralized recursion") {
  const GroundTruth gt = generate_ground_truth(4, 5, 1, 15);
  FedConfig config = small_population_config(4, 5, 1, 15);
  config.eta = 0.1;
  FedState state{init_representation(gt, config), Matrix(4, 1), 0};

  // Hand recursion over all four clients (full participation).
  Matrix expected = state.b;
  {
    Matrix mean_grad(5, 1);
    for (Index i = 0; i < 4; ++i) {
      const Vector z = gt.client_regressor(i);
      const Vector w = least_squares(expected, z);
      Vector residual = matvec(expected, w);
      for (Index j = 0; j < 5; ++j) residual[j] -= z[j];
      mean_grad = mean_grad + outer(residual, w);
    }
    expected = expected - mean_grad.scaled(config.eta / 4.0);
  }
  server_round(state, gt, config);
  CHECK((state.b - expected).max_abs() <= 1e-14);

  // Literal single-client instance (built by hand; the generator requires
  // n > k): one population round is one centralized descent step.
  Matrix w_one(1, 1);
  w_one(0, 0) = 1.0;
  Matrix e1(3, 1);
  e1(0, 0) = 1.0;
  const GroundTruth solo{w_one, OrthonormalBasis(e1), 1, 3, 1, 0};
  FedConfig solo_config = small_population_config(4, 3, 1, 15);
  solo_config.n = 1;
  solo_config.eta = 0.1;
  Matrix b0(3, 1);
  b0(0, 0) = 0.6;
  b0(1, 0) = 0.8;
  FedState solo_state{b0, Matrix(1, 1), 0};
  const Vector z = solo.client_regressor(0);
  const Vector w = least_squares(b0, z);
  Vector residual = matvec(b0, w);
  for (Index j = 0; j < 3; ++j) residual[j] -= z[j];
  const Matrix by_hand = b0 - outer(residual, w).scaled(0.1);
  server_round(solo_state, solo, solo_config);
  CHECK((solo_state.b - by_hand).max_abs() <= 1e-14);
}

TEST_CASE("planted span is a fixed point of the population round") {
  const GroundTruth gt = generate_ground_truth(8, 6, 2, 17);
  FedConfig config = small_population_config(8, 6, 2, 17);
  config.eta = 0.2;
  FedState state{gt.b_star.matrix(), Matrix(8, 2), 0};
  const FedRound rec = server_round(state, gt, config);
  CHECK(principal_angle_distance(state.b, gt.b_star.matrix()) <= 1e-10);
  CHECK(rec.f_norm <= 1e-10);
  CHECK(rec.pop_loss <= 1e-18);
}

TEST_CASE("parallel execution reproduces the serial trace bit for bit") {
  const GroundTruth gt = generate_ground_truth(30, 8, 2, 19);
  FedConfig config;
  config.n = 30;
  config.d = 8;
  config.k = 2;
  config.m = 6;
  config.r = 0.4;
  config.noise_var = 1e-3;
  config.rounds = 25;
  config.seed = 19;
  config.threads = 1;
  const FedTrace serial = run_fedrep(gt, config);
  config.threads = 4;
  const FedTrace parallel = run_fedrep(gt, config);
  REQUIRE(serial.rounds.size() == parallel.rounds.size());
  for (Index t = 0; t < serial.rounds.size(); ++t) {
    CHECK(serial.rounds[t].dist == parallel.rounds[t].dist);
    CHECK(serial.rounds[t].pop_loss == parallel.rounds[t].pop_loss);
    CHECK(serial.rounds[t].emp_loss == parallel.rounds[t].emp_loss);
    CHECK(serial.rounds[t].f_norm == parallel.rounds[t].f_norm);
  }
  CHECK(serial.final_b.data() == parallel.final_b.data());
  CHECK(serial.final_heads.data() == parallel.final_heads.data());
}

TEST_CASE("unsampled heads are carried over bitwise") {
  const GroundTruth gt = generate_ground_truth(20, 6, 2, 21);
  FedConfig config;
  config.n = 20;
  config.d = 6;
  config.k = 2;
  config.m = 5;
  config.r = 0.25;  // 5 of 20 per round
  config.noise_var = 1e-3;
  config.rounds = 1;
  config.seed = 21;
  config.eta = 0.05;
  FedState state{init_representation(gt, config), Matrix(20, 2), 0};
  server_round(state, gt, config);
  Index updated = 0;
  for (Index i = 0; i < 20; ++i) {
    const Vector head = state.heads.row(i);
    if (norm2(head) > 0.0) ++updated;
  }
  CHECK(updated == 5);

  // Second round: heads of clients outside the new sample stay put.
  const Matrix before = state.heads;
  server_round(state, gt, config);
  Index changed = 0;
  for (Index i = 0; i < 20; ++i) {
    if (state.heads.row(i) != before.row(i)) ++changed;
  }
  CHECK(changed <= 5);
}

TEST_CASE("population run contracts monotonically and records metadata") {
  const GroundTruth gt = generate_ground_truth(40, 9, 2, 23);
  FedConfig config = small_population_config(40, 9, 2, 23);
  config.rounds = 60;
  const FedTrace trace = run_fedrep(gt, config);
  CHECK(trace.warnings.empty());
  CHECK(trace.dist0 ==
        doctest::Approx(trace.rounds.front().dist).epsilon(1e-12));
  CHECK(trace.e0 == doctest::Approx(1.0 - trace.dist0 * trace.dist0)
                        .epsilon(1e-12));
  for (Index t = 0; t + 1 < trace.rounds.size(); ++t) {
    CHECK(trace.rounds[t + 1].dist <= trace.rounds[t].dist + 1e-12);
  }
  CHECK(trace.final_dist() < trace.dist0);

  // Ortho mode keeps the iterate orthonormal after every aggregation.
  FedConfig with_ortho = config;
  with_ortho.ortho = true;
  with_ortho.rounds = 10;
  FedState state{init_representation(gt, with_ortho), Matrix(40, 2), 0};
  for (Index t = 0; t < 10; ++t) {
    server_round(state, gt, with_ortho);
    Matrix gram = state.b.gram_with(state.b);
    for (Index i = 0; i < 2; ++i) gram(i, i) -= 1.0;
    CHECK(gram.max_abs() <= 1e-10);
  }
}

TEST_CASE("oversized steps are accepted but flagged") {
  const GroundTruth gt = generate_ground_truth(12, 6, 2, 25);
  FedConfig config = small_population_config(12, 6, 2, 25);
  config.rounds = 3;
  const SpectralBounds bounds = spectral_bounds(gt, 12);
  config.eta = 2.0 / (4.0 * bounds.sigma_max * bounds.sigma_max);
  const FedTrace trace = run_fedrep(gt, config);
  REQUIRE(trace.warnings.size() == 1);
  CHECK(trace.warnings.front().find("eta") != std::string::npos);
}

TEST_CASE("residual diagnostic tracks head estimation error") {
  const GroundTruth gt = generate_ground_truth(10, 8, 2, 27);
  RandomStream stream = RandomStream::derive(27, StreamPurpose::kTestSet);
  // A partially aligned orthonormal basis, fixed across trials.
  const Matrix mix =
      gt.b_star.matrix() + stream.gaussian_matrix(8, 2).scaled(0.4);
  const OrthonormalBasis b_hat = orthonormalize(mix);
  const std::vector<Index> subset{0, 3, 7};

  // Exact heads against b_hat: diagnostic is zero.
  Matrix exact_heads(3, 2);
  for (Index s = 0; s < 3; ++s) {
    exact_heads.set_row(
        s, matvec_transposed(b_hat.matrix(), gt.client_regressor(subset[s])));
  }
  CHECK(residual_f_diagnostic(b_hat, exact_heads, gt, subset) <= 1e-10);

  // Batch heads: error shrinks on average as m doubles.
  const auto mean_diag = [&](Index m) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Matrix heads(3, 2);
      for (Index s = 0; s < 3; ++s) {
        const SampleBatch batch =
            sample_batch(gt, subset[s], m, 1e-3, seed, 0);
        heads.set_row(s, client_head_update(b_hat.matrix(), batch));
      }
      total += residual_f_diagnostic(b_hat, heads, gt, subset);
    }
    return total / 20.0;
  };
  CHECK(mean_diag(40) < mean_diag(10));
}

TEST_CASE("config validation names bad fields") {
  const GroundTruth gt = generate_ground_truth(10, 8, 2, 29);
  FedConfig config = small_population_config(10, 8, 2, 29);
  config.k = 8;
  CHECK_THROWS_AS(run_fedrep(gt, config), ConfigError);
  config = small_population_config(10, 8, 2, 29);
  config.r = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = small_population_config(12, 8, 2, 29);  // n mismatch vs gt
  CHECK_THROWS_AS(run_fedrep(gt, config), ConfigError);
}

#include "fedrep/baselines.hpp"

#include <cmath>

namespace fedrep {
namespace {

// Mean squared prediction error of regressor theta on a noiseless test set
// drawn for the given head.
double test_mse(const Vector& theta, const GroundTruth& gt,
                const Vector& w_new, RandomStream& stream, Index test_size) {
  const Vector truth = matvec(gt.b_star.matrix(), w_new);
  double total = 0.0;
  for (Index j = 0; j < test_size; ++j) {
    const Vector x = stream.gaussian_vector(gt.d);
    const double diff = dot(theta, x) - dot(truth, x);
    total += diff * diff;
  }
  return total / static_cast<double>(test_size);
}

}  // namespace

FedRound gdgd_round(FedState& state, const GroundTruth& gt,
                    const FedConfig& config, Index tau, double alpha) {
  if (tau < 1) throw ConfigError("gdgd_round: tau must be >= 1");
  return server_round_with_policy(state, gt, config, HeadPolicy{tau, alpha});
}

FedTrace run_gdgd(const GroundTruth& gt, const FedConfig& config, Index tau,
                  double alpha) {
  if (tau < 1) throw ConfigError("run_gdgd: tau must be >= 1");
  return run_fedrep_with_policy(gt, config, HeadPolicy{tau, alpha});
}

Vector local_only_fit(const std::vector<SampleBatch>& batches) {
  if (batches.empty()) throw DimensionError("local_only_fit: no batches");
  Index total = 0;
  for (const SampleBatch& b : batches) total += b.y.size();
  const Index d = batches.front().x.cols();
  Matrix x(total, d);
  Vector y(total);
  Index row = 0;
  for (const SampleBatch& b : batches) {
    for (Index i = 0; i < b.y.size(); ++i, ++row) {
      x.set_row(row, b.x.row(i));
      y[row] = b.y[i];
    }
  }
  return solve_min_norm(x, y);
}

std::pair<Matrix, Vector> global_model_fit(const GroundTruth& gt) {
  Vector mean_head(gt.k, 0.0);
  for (Index i = 0; i < gt.n; ++i) {
    mean_head = axpy(1.0, gt.w_star.row(i), mean_head);
  }
  mean_head = scaled(mean_head, 1.0 / static_cast<double>(gt.n));
  return {gt.b_star.matrix(), mean_head};
}

double global_model_error(const GroundTruth& gt) {
  const Vector mean_head = global_model_fit(gt).second;
  double total = 0.0;
  for (Index i = 0; i < gt.n; ++i) {
    const Vector w = gt.w_star.row(i);
    for (Index j = 0; j < gt.k; ++j) {
      const double diff = mean_head[j] - w[j];
      total += diff * diff;
    }
  }
  return 0.5 * total / static_cast<double>(gt.n);
}

NewClientReport new_client_eval(const Matrix& b_learned, const GroundTruth& gt,
                                Index m_new, double noise_var,
                                std::uint64_t seed, Index test_size) {
  if (m_new < 1) throw DimensionError("new_client_eval: need m_new >= 1");
  if (b_learned.rows() != gt.d) {
    throw DimensionError("new_client_eval: representation dimension mismatch");
  }
  RandomStream stream = RandomStream::derive(seed, StreamPurpose::kNewClient);

  Vector w_new = stream.gaussian_vector(gt.k);
  w_new = scaled(w_new, std::sqrt(static_cast<double>(gt.k)) / norm2(w_new));
  const Vector truth = matvec(gt.b_star.matrix(), w_new);

  Matrix x(m_new, gt.d);
  Vector y(m_new);
  const double sd = std::sqrt(noise_var);
  for (Index j = 0; j < m_new; ++j) {
    x.set_row(j, stream.gaussian_vector(gt.d));
    y[j] = dot(x.row(j), truth);
    if (noise_var > 0.0) y[j] += sd * stream.next_gaussian();
  }

  // Head against the learned representation (min-norm when m_new < k).
  const Vector head = solve_min_norm(x * b_learned, y);
  const Vector theta_rep = matvec(b_learned, head);
  const Vector theta_local = local_only_fit({SampleBatch{0, x, y, noise_var}});
  const auto [b_glob, w_glob] = global_model_fit(gt);
  const Vector theta_glob = matvec(b_glob, w_glob);

  RandomStream test_stream = RandomStream::derive(seed, StreamPurpose::kTestSet);
  NewClientReport report;
  report.m_new = m_new;
  report.mse_fedrep = test_mse(theta_rep, gt, w_new, test_stream, test_size);
  test_stream = RandomStream::derive(seed, StreamPurpose::kTestSet);
  report.mse_fedavg_style =
      test_mse(theta_glob, gt, w_new, test_stream, test_size);
  test_stream = RandomStream::derive(seed, StreamPurpose::kTestSet);
  report.mse_local = test_mse(theta_local, gt, w_new, test_stream, test_size);
  return report;
}

}  // namespace fedrep

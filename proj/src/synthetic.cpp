#include "fedrep/synthetic.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fedrep {
namespace {

constexpr char kFixtureMagic[] = "fedrep-lab-ground-truth";
constexpr int kFixtureVersion = 1;

// Number of rn-subsets of n elements, capped at kSubsetBudget + 1.
std::uint64_t capped_binomial(Index n, Index rn) {
  // C(n, rn) built incrementally; bail out once past the budget.
  long double acc = 1.0L;
  const Index r = std::min<Index>(rn, n - rn);
  for (Index i = 1; i <= r; ++i) {
    acc = acc * static_cast<long double>(n - r + i) / static_cast<long double>(i);
    if (acc > static_cast<long double>(kSubsetBudget) + 0.5L) {
      return kSubsetBudget + 1;
    }
  }
  return static_cast<std::uint64_t>(acc + 0.5L);
}

}  // namespace

Vector GroundTruth::client_regressor(Index client_id) const {
  return matvec(b_star.matrix(), w_star.row(client_id));
}

GroundTruth generate_ground_truth(Index n, Index d, Index k,
                                  std::uint64_t seed) {
  if (k < 1 || k >= std::min(n, d)) {
    throw DimensionError("generate_ground_truth: need 1 <= k < min(n, d)");
  }
  RandomStream basis_stream =
      RandomStream::derive(seed, StreamPurpose::kGroundTruthBasis);
  OrthonormalBasis b_star = orthonormalize(basis_stream.gaussian_matrix(d, k));

  RandomStream head_stream =
      RandomStream::derive(seed, StreamPurpose::kGroundTruthHeads);
  Matrix w_star(n, k);
  const double target = std::sqrt(static_cast<double>(k));
  for (Index i = 0; i < n; ++i) {
    Vector row = head_stream.gaussian_vector(k);
    const double scale = target / norm2(row);
    w_star.set_row(i, scaled(row, scale));
  }
  return GroundTruth{std::move(w_star), std::move(b_star), n, d, k, seed};
}

SampleBatch sample_batch(const GroundTruth& gt, Index client_id, Index m,
                         double noise_var, std::uint64_t seed,
                         std::uint64_t counter, StreamPurpose purpose) {
  if (client_id >= gt.n) throw DimensionError("sample_batch: bad client id");
  if (m < 1) throw DimensionError("sample_batch: need m >= 1");
  RandomStream stream = RandomStream::derive(seed, purpose, client_id, counter);
  Matrix x = stream.gaussian_matrix(m, gt.d);
  const Vector regressor = gt.client_regressor(client_id);
  Vector y = matvec(x, regressor);
  if (noise_var > 0.0) {
    const double sd = std::sqrt(noise_var);
    for (double& yi : y) yi += sd * stream.next_gaussian();
  }
  return SampleBatch{client_id, std::move(x), std::move(y), noise_var};
}

SpectralBounds spectral_bounds(const GroundTruth& gt, Index rn) {
  if (rn < 1 || rn > gt.n) throw DimensionError("spectral_bounds: bad rn");
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(rn));

  if (capped_binomial(gt.n, rn) > kSubsetBudget) {
    const Vector sigma =
        singular_values(gt.w_star.scaled(1.0 / std::sqrt(double(gt.n))));
    return SpectralBounds{sigma.back(), sigma.front(), false};
  }

  // Lexicographic walk over all rn-subsets of [0, n).
  std::vector<Index> pick(rn);
  for (Index i = 0; i < rn; ++i) pick[i] = i;
  SpectralBounds out{0.0, 0.0, true};
  bool first = true;
  while (true) {
    Matrix sub(rn, gt.k);
    for (Index i = 0; i < rn; ++i) sub.set_row(i, gt.w_star.row(pick[i]));
    const Vector sigma = singular_values(sub.scaled(inv_sqrt));
    if (first || sigma.back() < out.sigma_min) out.sigma_min = sigma.back();
    if (first || sigma.front() > out.sigma_max) out.sigma_max = sigma.front();
    first = false;

    Index j = rn;
    bool exhausted = true;
    while (j-- > 0) {
      if (pick[j] < j + gt.n - rn) {
        exhausted = false;
        break;
      }
    }
    if (exhausted) return out;
    ++pick[j];
    for (Index t = j + 1; t < rn; ++t) pick[t] = pick[t - 1] + 1;
  }
}

void export_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::ostringstream out;
  out << kFixtureMagic << " v" << kFixtureVersion << "\n";
  out << gt.n << " " << gt.d << " " << gt.k << " " << gt.seed << "\n";
  char buf[40];
  auto emit_matrix = [&](const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << buf << (j + 1 == m.cols() ? "" : " ");
      }
      out << "\n";
    }
  };
  emit_matrix(gt.w_star);
  emit_matrix(gt.b_star.matrix());

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw ConfigError("export_ground_truth: cannot open " + path);
  file << out.str();
}

GroundTruth import_ground_truth(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("import_ground_truth: cannot open " + path);
  std::string magic, version;
  file >> magic >> version;
  if (magic != kFixtureMagic) {
    throw ConfigError("import_ground_truth: bad magic in " + path);
  }
  Index n = 0, d = 0, k = 0;
  std::uint64_t seed = 0;
  file >> n >> d >> k >> seed;
  if (!file || k < 1 || k >= std::min(n, d)) {
    throw ConfigError("import_ground_truth: bad header in " + path);
  }
  auto read_matrix = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (double& x : m.data()) file >> x;
    return m;
  };
  Matrix w_star = read_matrix(n, k);
  Matrix b_raw = read_matrix(d, k);
  if (!file) throw ConfigError("import_ground_truth: truncated file " + path);
  return GroundTruth{std::move(w_star), OrthonormalBasis(std::move(b_raw)),
                     n, d, k, seed};
}

}  // namespace fedrep

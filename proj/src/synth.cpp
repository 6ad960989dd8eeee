#include "sparsemeter/synth.hpp"

#include "sparsemeter/random.hpp"

#include <cmath>
#include <random>
#include <string>

namespace sparsemeter {

void SynthConfig::validate() const {
  if (d < 1 || n < 1) throw InvalidArgument("synthetic data needs d >= 1 and n >= 1");
  const Index m = feature_count();
  if (!(a > 0.0)) throw InvalidArgument("a must be positive");
  if (a > static_cast<double>(m))
    throw InvalidArgument("a = " + std::to_string(a) + " exceeds the ground-truth feature count " + std::to_string(m));
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be finite and >= 0");
}

SparseLinearData gen_sparse_linear(const SynthConfig& cfg) {
  cfg.validate();
  const Index d = cfg.d;
  const Index m = cfg.feature_count();
  const Index n = cfg.n;
  Rng rng(cfg.seed);

  Matrix features(d, m);
  for (Index i = 0; i < m; ++i) features.col(i) = random_unit_vector(d, rng);
  Dictionary dictionary(std::move(features));

  const double p = cfg.a / static_cast<double>(m);
  std::bernoulli_distribution active(p);
  std::uniform_real_distribution<double> weight(0.0, 1.0);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(cfg.a * static_cast<double>(n) * 1.2) + 16);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      if (!active(rng)) continue;
      const double w = weight(rng);
      // Uniform(0,1) can return exactly 0; such a draw is an absent feature.
      if (w > 0.0) triplets.emplace_back(i, j, w);
    }
  }
  SparseMatrix coeffs(m, n);
  coeffs.setFromTriplets(triplets.begin(), triplets.end());
  CoefficientSet truth_coeffs(std::move(coeffs));

  RowMatrix proto = reconstruct(dictionary, truth_coeffs);
  Vector mean = proto.colwise().mean().transpose();
  proto.rowwise() -= mean.transpose();

  if (cfg.sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(cfg.a / static_cast<double>(d)) * cfg.sigma);
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < d; ++k) proto(j, k) += noise(rng);
  }

  return {ActivationSet(std::move(proto)),
          GroundTruth{std::move(dictionary), std::move(truth_coeffs), cfg.a / 2.0, std::move(mean)}};
}

ActivationSet gen_gaussian(Index d, Index n, std::uint64_t seed) {
  if (d < 1 || n < 1) throw InvalidArgument("gaussian control needs d >= 1 and n >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix data(n, d);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < d; ++k) data(j, k) = normal(rng);
  return ActivationSet(std::move(data));
}

ActivationSet gen_heavy_tailed_raw(Index d, Index n, std::uint64_t seed) {
  if (d < 1 || n < 1) throw InvalidArgument("heavy-tailed control needs d >= 1 and n >= 1");
  Rng rng(seed);
  std::cauchy_distribution<double> cauchy(0.0, 1.0);
  RowMatrix data(n, d);
  for (Index j = 0; j < n; ++j) {
    const Vector direction = random_unit_vector(d, rng);
    const double radius = std::abs(cauchy(rng));
    data.row(j) = radius * direction.transpose();
  }
  return ActivationSet(std::move(data));
}

ActivationSet gen_heavy_tailed(Index d, Index n, std::uint64_t seed) {
  return whiten(gen_heavy_tailed_raw(d, n, seed));
}

ActivationSet gen_rademacher(Index d, Index n, std::uint64_t seed) {
  if (d < 1 || n < 1) throw InvalidArgument("rademacher control needs d >= 1 and n >= 1");
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  RowMatrix data(n, d);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < d; ++k) data(j, k) = coin(rng) ? 1.0 : -1.0;
  return ActivationSet(std::move(data));
}

ActivationSet whiten(const ActivationSet& x) {
  RowMatrix centered = center(x).activations.data();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.n());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const Vector& values = eig.eigenvalues();
  if (!(values.minCoeff() > 1e-12 * std::max(1.0, values.maxCoeff())))
    throw NumericalError("cannot whiten: sample covariance is singular (need n > d)");
  const Matrix inv_sqrt = eig.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
  RowMatrix out = centered * inv_sqrt;
  return ActivationSet(std::move(out), x.labels());
}

ActivationSet normalize_for_loss(const ActivationSet& x) {
  ActivationSet centered = center(x).activations;
  const double norm = mean_row_norm(centered);
  if (!(norm > 1e-300)) throw NumericalError("cannot normalize: data is all zero after centering");
  return centered.scaled(1.0 / norm);
}

}  // namespace sparsemeter

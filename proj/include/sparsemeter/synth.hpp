#pragma once

// Synthetic activation generators: sparse linear data with known ground truth,
// and three non-sparse-linear controls (Gaussian, heavy-tailed, Rademacher).
// Every generator is a pure function of its arguments and seed.

#include "sparsemeter/core.hpp"

#include <cstdint>
#include <optional>

namespace sparsemeter {

struct SynthConfig {
  Index d = 64;
  Index m_true = 0;   ///< 0 selects 4 * d
  double a = 8.0;     ///< expected number of active features per activation
  double sigma = 0.1;
  Index n = 8192;
  std::uint64_t seed = 0;

  Index feature_count() const { return m_true > 0 ? m_true : 4 * d; }
  void validate() const;
};

struct GroundTruth {
  Dictionary features;
  CoefficientSet coefficients;
  double true_weighted_sparsity = 0.0;  ///< a / 2
  Vector proto_mean;                    ///< mean subtracted from the proto-activations
};

struct SparseLinearData {
  ActivationSet activations;
  GroundTruth truth;
};

/// Proto-activations sum Uniform(0,1)-weighted unit-sphere features, each
/// present with probability a / m_true; the set is centered, then Gaussian
/// noise of per-coordinate variance a * sigma^2 / d is added.
SparseLinearData gen_sparse_linear(const SynthConfig& cfg);

/// i.i.d. standard normal entries.
ActivationSet gen_gaussian(Index d, Index n, std::uint64_t seed);

/// Isotropic directions with |Cauchy| radii, then empirically whitened
/// (sample mean removed, sample covariance mapped to identity).
ActivationSet gen_heavy_tailed(Index d, Index n, std::uint64_t seed);

/// Heavy-tailed rows before whitening (exposed for tests).
ActivationSet gen_heavy_tailed_raw(Index d, Index n, std::uint64_t seed);

/// i.i.d. +-1 entries.
ActivationSet gen_rademacher(Index d, Index n, std::uint64_t seed);

/// Centers, then scales by one shared constant so the mean row norm is 1.
ActivationSet normalize_for_loss(const ActivationSet& x);

/// Maps centered data to identity sample covariance via the inverse matrix square root.
ActivationSet whiten(const ActivationSet& x);

}  // namespace sparsemeter

#pragma once

// Alternating minimization of the sparse coding objective.
//
// The coefficient step is a greedy nonnegative pursuit with an L1 shift: for
// each activation, repeatedly take the unused feature with the largest dot
// product against the current residual and give it coefficient
// (residual . f - lambda / 2), stopping at the first nonpositive candidate.
// The dictionary step is a few minibatch gradient steps on the reconstruction
// error with columns renormalized after every step.

#include "sparsemeter/core.hpp"
#include "sparsemeter/random.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace sparsemeter {

/// How the dictionary gradient is scaled before it is applied.
///  plain     - Phi -= step_size * gradient
///  lipschitz - Phi -= (step_size / L) * gradient, where L is the largest
///              eigenvalue of (2/b) alpha_b alpha_b^T for the batch. Invariant
///              to the scale of the activations; step_size <= 1 is a descent
///              step for the reconstruction error before renormalization.
enum class StepRule { plain, lipschitz };

struct SolverConfig {
  double lambda = 0.0;  ///< L1 weight. With adapt_lambda, 0 selects 0.1 * mean row norm as the start.
  double dict_factor = 8.0;  ///< m = round(dict_factor * d)
  int phi_steps = 5;
  double step_size = 0.05;
  StepRule step_rule = StepRule::plain;
  Index batch_size = 256;  ///< full batch when >= n
  int max_alternations = 200;
  double rel_tol = 1e-4;
  bool adapt_lambda = false;
  int adapt_rounds = 5;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
  Index dictionary_size(Index d) const;
};

enum class StopReason { nonpositive_candidate, feature_exhaustion };

struct AlphaStepTrace {
  std::vector<CoefficientEntry> selections;  ///< in selection order
  StopReason stop = StopReason::nonpositive_candidate;
};

struct FitResult {
  Dictionary dictionary;
  CoefficientSet coefficients;
  double final_lambda = 0.0;
  std::vector<double> objective_history;
  double residual_norm_sq = 0.0;
  /// Lambda used by each adaptive round; a single entry for fixed-lambda fits.
  std::vector<double> lambda_history;
};

/// Greedy coefficients for every row of `x` under a frozen dictionary.
CoefficientSet alpha_step(const ActivationSet& x, const Dictionary& phi, double lambda);

/// Same contract as alpha_step; the name used when evaluating alpha(Phi) for metrics.
CoefficientSet infer_coefficients(const ActivationSet& x, const Dictionary& phi, double lambda);

/// Greedy pursuit on one activation, recording selection order and stop reason.
AlphaStepTrace alpha_step_traced(const Vector& x, const Dictionary& phi, double lambda);

/// cfg.phi_steps minibatch gradient steps on ||X - Phi alpha||^2 with alpha fixed.
Dictionary phi_step(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha,
                    const SolverConfig& cfg, Rng& rng);

/// Produces a fresh activation batch on every call.
using Sampler = std::function<ActivationSet(Rng&)>;

/// Fits a dictionary to a fixed activation matrix. `initial` overrides the
/// data-row initialization (and must have the configured size).
FitResult fit(const ActivationSet& x, const SolverConfig& cfg, const std::optional<Dictionary>& initial = std::nullopt);

/// Streaming variant: draws a new batch each alternation. The returned
/// coefficients decompose the last batch drawn.
FitResult fit(const Sampler& sampler, const SolverConfig& cfg, const std::optional<Dictionary>& initial = std::nullopt);

struct AdaptiveLambdaResult {
  FitResult fit;
  double lambda = 0.0;
  std::vector<double> history;
};

/// Iterates lambda <- 0.1 * mean_column_max(alpha) until the relative change
/// drops below 10% or `max_rounds` fits have run. Throws NumericalError if a
/// fit returns all-zero coefficients.
AdaptiveLambdaResult adapt_lambda(const std::function<FitResult(double)>& fit_once, double lambda0, int max_rounds);

/// 0.1 * mean row norm, the default adaptive starting point.
double default_initial_lambda(const ActivationSet& x);

}  // namespace sparsemeter

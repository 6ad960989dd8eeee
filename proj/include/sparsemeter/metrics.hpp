#pragma once

// Sparsity metrics for a decomposition X ~ Phi alpha.
//
//   N0     = (1/n) ||alpha||_0
//   L      = sparse coding objective at the final dictionary
//   S_p    = mean_j sum_i alpha_ij^p / (mean_j max_i alpha_ij)^p
//   L_norm = L / (lambda * mean_j max_i alpha_ij)
//
// "Average maximum coefficient" is always the mean over columns of the
// per-column maximum. Metrics that divide by it are std::nullopt (serialized
// as null) when every coefficient is zero.

#include "sparsemeter/core.hpp"

#include <optional>
#include <string>

namespace sparsemeter {

struct MetricReport {
  double nonzero_entries = 0.0;
  double final_loss = 0.0;
  std::optional<double> avg_coeff_norm;
  double p = 1.0;
  std::optional<double> normalized_loss;
  double variance_explained = 0.0;
  double lambda_used = 0.0;

  /// Flat JSON object with snake_case keys; undefined metrics are null.
  std::string to_json() const;
  static MetricReport from_json(const std::string& text);
};

double metric_nonzero(const CoefficientSet& alpha);

double metric_final_loss(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha, double lambda);

std::optional<double> metric_avg_coeff_norm(const CoefficientSet& alpha, double p = 1.0);

std::optional<double> metric_normalized_loss(const ActivationSet& x, const Dictionary& phi,
                                             const CoefficientSet& alpha, double lambda);

/// 1 - ||X - Phi alpha||_F^2 / ||X||_F^2. Warns if X is not centered.
double variance_explained(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha);

MetricReport compute_metrics(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha,
                             double lambda, double p = 1.0);

}  // namespace sparsemeter

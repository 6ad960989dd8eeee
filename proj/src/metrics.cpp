#include "sparsemeter/metrics.hpp"

#include "sparsemeter/log.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace sparsemeter {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["nonzero_entries"] = nonzero_entries;
  j["final_loss"] = final_loss;
  j["avg_coeff_norm"] = optional_json(avg_coeff_norm);
  j["p"] = p;
  j["normalized_loss"] = optional_json(normalized_loss);
  j["variance_explained"] = variance_explained;
  j["lambda_used"] = lambda_used;
  return j.dump(2);
}

MetricReport MetricReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricReport r;
  r.nonzero_entries = j.at("nonzero_entries").get<double>();
  r.final_loss = j.at("final_loss").get<double>();
  r.avg_coeff_norm = optional_from(j, "avg_coeff_norm");
  r.p = j.at("p").get<double>();
  r.normalized_loss = optional_from(j, "normalized_loss");
  r.variance_explained = j.at("variance_explained").get<double>();
  r.lambda_used = j.at("lambda_used").get<double>();
  return r;
}

double metric_nonzero(const CoefficientSet& alpha) {
  return static_cast<double>(alpha.nonzeros()) / static_cast<double>(alpha.n());
}

double metric_final_loss(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha, double lambda) {
  return objective(x, phi, alpha, lambda);
}

std::optional<double> metric_avg_coeff_norm(const CoefficientSet& alpha, double p) {
  if (!(p > 0.0)) throw InvalidArgument("p must be positive");
  const double avg_max = mean_column_max(alpha);
  if (!(avg_max > 0.0)) return std::nullopt;
  const auto& s = alpha.matrix();
  double mass = 0.0;
  for (Index k = 0; k < s.nonZeros(); ++k) mass += p == 1.0 ? s.valuePtr()[k] : std::pow(s.valuePtr()[k], p);
  mass /= static_cast<double>(alpha.n());
  return mass / std::pow(avg_max, p);
}

std::optional<double> metric_normalized_loss(const ActivationSet& x, const Dictionary& phi,
                                             const CoefficientSet& alpha, double lambda) {
  const double loss = objective(x, phi, alpha, lambda);
  const double avg_max = mean_column_max(alpha);
  if (!(lambda > 0.0) || !(avg_max > 0.0)) return std::nullopt;
  return loss / (lambda * avg_max);
}

double variance_explained(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha) {
  const double total = x.data().squaredNorm();
  if (!(total > 0.0)) throw NumericalError("variance explained is undefined for all-zero activations");
  const double scale = std::sqrt(total / static_cast<double>(x.n()));
  const double max_mean = x.data().colwise().mean().cwiseAbs().maxCoeff();
  if (max_mean > 1e-6 * scale) log::warn("variance_explained: activations are not centered");
  return 1.0 - residual_norm_sq(x, phi, alpha) / total;
}

MetricReport compute_metrics(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha,
                             double lambda, double p) {
  MetricReport r;
  r.nonzero_entries = metric_nonzero(alpha);
  r.final_loss = metric_final_loss(x, phi, alpha, lambda);
  r.avg_coeff_norm = metric_avg_coeff_norm(alpha, p);
  r.p = p;
  r.normalized_loss = metric_normalized_loss(x, phi, alpha, lambda);
  r.variance_explained = variance_explained(x, phi, alpha);
  r.lambda_used = lambda;
  return r;
}

}  // namespace sparsemeter

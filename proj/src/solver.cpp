#include "sparsemeter/solver.hpp"

#include "sparsemeter/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparsemeter {

void SolverConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
  if (!(dict_factor >= 1.0)) throw InvalidArgument("dict_factor must be >= 1");
  if (phi_steps < 1 || batch_size < 1 || max_alternations < 1 || adapt_rounds < 1)
    throw InvalidArgument("iteration budgets and batch size must be >= 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("step_size must be positive");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("rel_tol must lie in (0, 1)");
}

Index SolverConfig::dictionary_size(Index d) const {
  return std::max<Index>(1, static_cast<Index>(std::llround(dict_factor * static_cast<double>(d))));
}

namespace {

constexpr Index kAlphaBlock = 512;

// Greedy pursuit on one activation given its correlations with every feature.
// `corr` is consumed: after each selection it is updated through the Gram
// matrix so that it always holds Phi^T r for the current residual r. Used
// features are parked at -inf, which the update leaves in place.
template <typename OnSelect>
StopReason greedy_column(Eigen::Ref<Vector> corr, const Matrix& gram, double half_lambda, OnSelect&& on_select) {
  const Index m = corr.size();
  double* c = corr.data();
  constexpr double parked = -std::numeric_limits<double>::infinity();
  for (Index step = 0; step < m; ++step) {
    // Vectorized maximum, then its lowest index: ties go to the lowest index.
    const double top = corr.maxCoeff();
    if (top == parked) break;
    Index best = 0;
    while (c[best] != top) ++best;
    const double coeff = top - half_lambda;
    if (!(coeff > 0.0)) return StopReason::nonpositive_candidate;
    on_select(best, coeff);
    corr.noalias() -= coeff * gram.col(best);
    c[best] = parked;
  }
  return StopReason::feature_exhaustion;
}

// Largest eigenvalue of (2/b) A A^T for the b-column coefficient batch A,
// i.e. the Lipschitz constant of the reconstruction gradient in Phi.
double reconstruction_lipschitz(const SparseMatrix& batch) {
  const Index m = batch.rows();
  const double b = static_cast<double>(batch.cols());
  if (batch.nonZeros() == 0) return 0.0;
  Vector v = Vector::Ones(m) / std::sqrt(static_cast<double>(m));
  double estimate = 0.0;
  for (int it = 0; it < 30; ++it) {
    Vector w = batch * (batch.transpose() * v);
    const double norm = w.norm();
    if (!(norm > 0.0)) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - estimate) <= 1e-3 * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // Power iteration approaches from below; pad slightly.
  return 1.05 * 2.0 * estimate / b;
}

void check_alpha_inputs(const ActivationSet& x, const Dictionary& phi, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
  if (x.d() != phi.d())
    throw InvalidArgument("activation dimension " + std::to_string(x.d()) + " does not match dictionary dimension " +
                          std::to_string(phi.d()));
}

Dictionary initial_dictionary(const ActivationSet& x, Index m, Rng& rng) {
  const Index d = x.d();
  Matrix features(d, m);
  if (x.n() >= m) {
    const Vector mean = x.data().colwise().mean().transpose();
    const auto rows = sample_without_replacement(x.n(), m, rng);
    for (Index i = 0; i < m; ++i) {
      Vector col = x.row(rows[static_cast<std::size_t>(i)]) - mean;
      const double norm = col.norm();
      features.col(i) = norm >= 1e-12 ? Vector(col / norm) : random_unit_vector(d, rng);
    }
  } else {
    for (Index i = 0; i < m; ++i) features.col(i) = random_unit_vector(d, rng);
  }
  return Dictionary(std::move(features));
}

void check_objective(double value, int alternation) {
  if (!std::isfinite(value))
    throw NumericalError("objective became non-finite at alternation " + std::to_string(alternation) +
                         " (step size too large?)");
}

bool converged(double previous, double current, double rel_tol) {
  const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
  return std::abs(previous - current) / scale < rel_tol;
}

FitResult fit_fixed_lambda(const ActivationSet& x, const SolverConfig& cfg, double lambda, Dictionary phi, Rng& rng) {
  FitResult result;
  result.final_lambda = lambda;
  result.lambda_history = {lambda};
  CoefficientSet alpha = alpha_step(x, phi, lambda);
  double current = objective(x, phi, alpha, lambda);
  check_objective(current, 0);
  result.objective_history.push_back(current);
  // Full-batch mode keeps the history monotone: an alternation that raises the
  // objective is rejected and the dictionary step is halved. The greedy
  // alpha-step is not an exact minimizer, so this is not automatic.
  const bool full_batch = cfg.batch_size >= x.n();
  SolverConfig step_cfg = cfg;
  for (int t = 1; t <= cfg.max_alternations; ++t) {
    Dictionary next_phi = phi_step(x, phi, alpha, step_cfg, rng);
    CoefficientSet next_alpha = alpha_step(x, next_phi, lambda);
    const double next = objective(x, next_phi, next_alpha, lambda);
    check_objective(next, t);
    if (full_batch && next > current) {
      step_cfg.step_size *= 0.5;
      log::debug("alternation " + std::to_string(t) + " raised the objective; step halved to " +
                 std::to_string(step_cfg.step_size));
      if (step_cfg.step_size < cfg.step_size * 1e-6) break;
      continue;
    }
    phi = std::move(next_phi);
    alpha = std::move(next_alpha);
    result.objective_history.push_back(next);
    const bool done = converged(current, next, cfg.rel_tol);
    current = next;
    if (done) break;
  }
  result.residual_norm_sq = residual_norm_sq(x, phi, alpha);
  result.dictionary = std::move(phi);
  result.coefficients = std::move(alpha);
  return result;
}

FitResult fit_sampled_fixed_lambda(const Sampler& sampler, const SolverConfig& cfg, double lambda, Dictionary phi,
                                   Rng& rng) {
  FitResult result;
  result.final_lambda = lambda;
  result.lambda_history = {lambda};
  std::optional<ActivationSet> batch;
  for (int t = 0; t < cfg.max_alternations; ++t) {
    batch = sampler(rng);
    if (batch->d() != phi.d()) throw InvalidArgument("sampler produced a batch with the wrong dimension");
    CoefficientSet alpha = alpha_step(*batch, phi, lambda);
    const double value = objective(*batch, phi, alpha, lambda);
    check_objective(value, t);
    result.objective_history.push_back(value);
    phi = phi_step(*batch, phi, alpha, cfg, rng);
  }
  CoefficientSet alpha = alpha_step(*batch, phi, lambda);
  result.residual_norm_sq = residual_norm_sq(*batch, phi, alpha);
  result.dictionary = std::move(phi);
  result.coefficients = std::move(alpha);
  return result;
}

template <typename FitOnce>
FitResult run_fit(const SolverConfig& cfg, double lambda0, Dictionary start, Rng& rng, FitOnce&& fit_once) {
  if (!cfg.adapt_lambda) return fit_once(cfg.lambda, std::move(start), rng);
  // Each round warm-starts from the previous round's dictionary.
  Dictionary warm = std::move(start);
  auto adaptive = adapt_lambda(
      [&](double lambda) {
        FitResult r = fit_once(lambda, warm, rng);
        warm = r.dictionary;
        return r;
      },
      lambda0, cfg.adapt_rounds);
  adaptive.fit.lambda_history = adaptive.history;
  return std::move(adaptive.fit);
}

}  // namespace

CoefficientSet alpha_step(const ActivationSet& x, const Dictionary& phi, double lambda) {
  check_alpha_inputs(x, phi, lambda);
  const Index n = x.n();
  const Index m = phi.m();
  const Matrix& features = phi.features();
  const Matrix gram = features.transpose() * features;
  const double half_lambda = 0.5 * lambda;

  std::vector<Eigen::Triplet<double>> triplets;
  Matrix corr;
  for (Index start = 0; start < n; start += kAlphaBlock) {
    const Index rows = std::min(kAlphaBlock, n - start);
    corr.noalias() = features.transpose() * x.data().middleRows(start, rows).transpose();
    for (Index b = 0; b < rows; ++b) {
      const Index j = start + b;
      greedy_column(corr.col(b), gram, half_lambda, [&](Index i, double c) { triplets.emplace_back(i, j, c); });
    }
  }
  SparseMatrix coeffs(m, n);
  coeffs.setFromTriplets(triplets.begin(), triplets.end());
  return CoefficientSet(std::move(coeffs));
}

CoefficientSet infer_coefficients(const ActivationSet& x, const Dictionary& phi, double lambda) {
  return alpha_step(x, phi, lambda);
}

AlphaStepTrace alpha_step_traced(const Vector& x, const Dictionary& phi, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
  if (x.size() != phi.d()) throw InvalidArgument("activation dimension does not match dictionary dimension");
  const Matrix& features = phi.features();
  const Matrix gram = features.transpose() * features;
  Vector corr = features.transpose() * x;
  AlphaStepTrace trace;
  trace.stop = greedy_column(corr, gram, 0.5 * lambda, [&](Index i, double c) { trace.selections.push_back({i, c}); });
  return trace;
}

Dictionary phi_step(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha,
                    const SolverConfig& cfg, Rng& rng) {
  if (x.d() != phi.d() || alpha.m() != phi.m() || alpha.n() != x.n())
    throw InvalidArgument("phi_step: inconsistent shapes (X " + std::to_string(x.n()) + "x" + std::to_string(x.d()) +
                          ", Phi " + std::to_string(phi.d()) + "x" + std::to_string(phi.m()) + ", alpha " +
                          std::to_string(alpha.m()) + "x" + std::to_string(alpha.n()) + ")");
  Matrix features = phi.features();
  const Index n = x.n();
  const bool full_batch = cfg.batch_size >= n;
  for (int s = 0; s < cfg.phi_steps; ++s) {
    Matrix residual;  // d x b
    Matrix gradient;  // d x m
    SparseMatrix batch_coeffs;
    if (full_batch) {
      residual = x.data().transpose();
      residual.noalias() -= features * alpha.matrix();
      gradient.noalias() = residual * alpha.matrix().transpose();
      gradient *= -2.0 / static_cast<double>(n);
    } else {
      const auto rows = sample_without_replacement(n, cfg.batch_size, rng);
      batch_coeffs = alpha.select_columns(rows).matrix();
      residual.resize(x.d(), cfg.batch_size);
      for (Index k = 0; k < cfg.batch_size; ++k)
        residual.col(k) = x.data().row(rows[static_cast<std::size_t>(k)]).transpose();
      residual.noalias() -= features * batch_coeffs;
      gradient.noalias() = residual * batch_coeffs.transpose();
      gradient *= -2.0 / static_cast<double>(cfg.batch_size);
    }
    double step = cfg.step_size;
    if (cfg.step_rule == StepRule::lipschitz) {
      const auto& batch = full_batch ? alpha.matrix() : batch_coeffs;
      const double lipschitz = reconstruction_lipschitz(batch);
      if (!(lipschitz > 0.0)) continue;  // no active coefficients: zero gradient
      step /= lipschitz;
    }
    features.noalias() -= step * gradient;
    for (Index i = 0; i < features.cols(); ++i) {
      const double norm = features.col(i).norm();
      if (!std::isfinite(norm)) throw NumericalError("dictionary update diverged (non-finite column)");
      if (norm < 1e-12) {
        log::info("phi_step: column " + std::to_string(i) + " collapsed; re-initialized to a random direction");
        features.col(i) = random_unit_vector(features.rows(), rng);
      } else {
        features.col(i) /= norm;
      }
    }
  }
  return Dictionary(std::move(features));
}

FitResult fit(const ActivationSet& x, const SolverConfig& cfg, const std::optional<Dictionary>& initial) {
  cfg.validate();
  Rng rng(cfg.seed);
  const Index m = cfg.dictionary_size(x.d());
  Dictionary start = initial ? *initial : initial_dictionary(x, m, rng);
  if (start.d() != x.d()) throw InvalidArgument("initial dictionary dimension does not match the activations");
  const double lambda0 = cfg.lambda > 0.0 ? cfg.lambda : default_initial_lambda(x);
  return run_fit(cfg, lambda0, std::move(start), rng, [&](double lambda, Dictionary phi, Rng& r) {
    return fit_fixed_lambda(x, cfg, lambda, std::move(phi), r);
  });
}

FitResult fit(const Sampler& sampler, const SolverConfig& cfg, const std::optional<Dictionary>& initial) {
  cfg.validate();
  if (!sampler) throw InvalidArgument("empty sampler");
  Rng rng(cfg.seed);
  const ActivationSet first = sampler(rng);
  const Index m = cfg.dictionary_size(first.d());
  Dictionary start = initial ? *initial : initial_dictionary(first, m, rng);
  if (start.d() != first.d()) throw InvalidArgument("initial dictionary dimension does not match the activations");
  const double lambda0 = cfg.lambda > 0.0 ? cfg.lambda : default_initial_lambda(first);
  return run_fit(cfg, lambda0, std::move(start), rng, [&](double lambda, Dictionary phi, Rng& r) {
    return fit_sampled_fixed_lambda(sampler, cfg, lambda, std::move(phi), r);
  });
}

AdaptiveLambdaResult adapt_lambda(const std::function<FitResult(double)>& fit_once, double lambda0, int max_rounds) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) throw InvalidArgument("initial lambda must be positive");
  if (max_rounds < 1) throw InvalidArgument("adapt_rounds must be >= 1");
  AdaptiveLambdaResult out;
  double lambda = lambda0;
  for (int round = 0; round < max_rounds; ++round) {
    out.fit = fit_once(lambda);
    out.lambda = lambda;
    out.history.push_back(lambda);
    const double avg_max = mean_column_max(out.fit.coefficients);
    if (!(avg_max > 0.0))
      throw NumericalError("lambda too large: all coefficients are zero at lambda = " + std::to_string(lambda));
    const double next = 0.1 * avg_max;
    log::debug("adapt_lambda round " + std::to_string(round) + ": lambda " + std::to_string(lambda) + " -> " +
               std::to_string(next));
    if (std::abs(next - lambda) / lambda < 0.1) break;
    lambda = next;
  }
  return out;
}

double default_initial_lambda(const ActivationSet& x) {
  const double value = 0.1 * mean_row_norm(x);
  if (!(value > 0.0)) throw NumericalError("cannot pick a starting lambda for all-zero activations");
  return value;
}

}  // namespace sparsemeter

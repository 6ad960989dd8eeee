#pragma once

// Experiment drivers. Each driver produces an ExperimentResult: a long-format
// table with one row per (cell, metric). Cells own their seeds, derived from
// the master seed and the cell id, so a serial run and any parallel schedule
// produce the same rows; tables are sorted before they are written.

#include "sparsemeter/core.hpp"
#include "sparsemeter/metrics.hpp"
#include "sparsemeter/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sparsemeter {

enum class ExperimentKind { sweep, discriminate, ablation, layers, embeddings };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

/// One axis of the ablation grid, varied alone from the base configuration.
enum class AblationAxis { dict_16d, sigma_low, sigma_high, d_small, d_large, m_true_8d };

std::string to_string(AblationAxis axis);
AblationAxis parse_ablation_axis(const std::string& text);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::sweep;

  // Synthetic data
  std::vector<double> a_grid = {2, 4, 8, 16, 32, 64};
  std::vector<double> discrimination_a = {5, 10, 20};
  Index d = 64;
  Index n = 8192;
  double sigma = 0.1;
  double m_true_factor = 4.0;

  // Ablation
  std::vector<AblationAxis> ablation_axes = {AblationAxis::dict_16d, AblationAxis::sigma_low, AblationAxis::sigma_high,
                                             AblationAxis::d_small,  AblationAxis::d_large,   AblationAxis::m_true_8d};
  bool ablation_discriminate = true;

  // Activation files for layers (one per layer, in order) or embeddings (one file).
  std::vector<std::filesystem::path> datasets;
  /// Lambda held fixed while fitting each layer, and the lambda used to decompose afterwards.
  double layer_fit_lambda = 0.1;
  std::optional<double> layer_infer_lambda;
  double layer_variance_threshold = 0.98;
  double embedding_variance_threshold = 0.90;

  SolverConfig solver = default_experiment_solver();
  std::filesystem::path output;
  std::uint64_t seed = 0;

  /// Validates invariants (nonempty grids, existing files for file-driven kinds).
  void validate() const;

  /// Adaptive lambda, dictionary 8d, Lipschitz-scaled minibatch steps.
  static SolverConfig default_experiment_solver();
  /// Desk profile (d = 64, n = 8192) or the larger d = 256, n = 16384 profile.
  static ExperimentConfig full_scale(ExperimentConfig base);
};

/// Parses "key = value" lines ('#' starts a comment) and applies them to `cfg`.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
/// Applies a single key/value override; throws InvalidArgument on unknown keys.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct ResultRow {
  std::string table;
  std::string dataset;
  Index d = 0;
  Index m = 0;
  double lambda = 0.0;
  std::string metric;
  std::optional<double> value;
  std::optional<double> variance_explained;
  std::optional<double> true_sparsity;
  double wall_time = 0.0;
  std::string status = "ok";  ///< "ok", "flagged" or "failed"
  std::string note;
};

struct ExperimentResult {
  static constexpr int kFormatVersion = 1;
  int format_version = kFormatVersion;
  std::vector<ResultRow> rows;

  /// Sorts rows by (table, dataset, metric).
  void sort();
  void append(const ExperimentResult& other);

  /// Value of `metric` for `dataset` (first match, optionally restricted to `table`).
  std::optional<double> value(const std::string& dataset, const std::string& metric,
                              const std::string& table = {}) const;
  const ResultRow* find(const std::string& dataset, const std::string& metric, const std::string& table = {}) const;
  std::vector<std::string> tables() const;
  ExperimentResult table(const std::string& name) const;

  std::string to_csv() const;
  nlohmann::json to_json() const;
  static ExperimentResult from_json(const nlohmann::json& j);

  /// Writes "<stem>.csv" and "<stem>.json".
  void write(const std::filesystem::path& stem) const;
};

/// Metric names emitted per cell.
inline const std::vector<std::string> kMetricNames = {"nonzero_entries", "final_loss", "avg_coeff_norm",
                                                      "normalized_loss"};

/// Fits `x` and emits one row per metric. Failures become a single "failed" row.
ExperimentResult evaluate_cell(const std::string& table, const std::string& dataset, const ActivationSet& x,
                               const SolverConfig& solver, std::optional<double> true_sparsity = std::nullopt);

ExperimentResult run_sparsity_sweep(const ExperimentConfig& cfg, const std::string& table = "sweep");
ExperimentResult run_discrimination(const ExperimentConfig& cfg, const std::string& table = "discriminate");
ExperimentResult run_ablation_grid(const ExperimentConfig& cfg);
ExperimentResult run_layer_sweep(const ExperimentConfig& cfg);
ExperimentResult run_embedding_experiment(const ExperimentConfig& cfg);

/// Dispatches on cfg.kind.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// The configuration an ablation axis applies on top of `base`.
ExperimentConfig ablation_variant(const ExperimentConfig& base, AblationAxis axis);

}  // namespace sparsemeter

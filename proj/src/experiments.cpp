#include "sparsemeter/experiments.hpp"

#include "sparsemeter/ingest.hpp"
#include "sparsemeter/log.hpp"
#include "sparsemeter/random.hpp"
#include "sparsemeter/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace sparsemeter {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': '" + value + "' is not a number");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': '" + value + "' is not an integer");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw InvalidArgument("config key '" + key + "': '" + value + "' is not a boolean");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_double(key, item));
  return out;
}

std::string format_number(double v) {
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return {};
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << *v;
  return out.str();
}

nlohmann::json json_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> json_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

SolverConfig cell_solver(const SolverConfig& base, std::uint64_t master, const std::string& cell) {
  SolverConfig s = base;
  s.seed = derive_seed(master, cell + "/fit");
  return s;
}

std::uint64_t data_seed(std::uint64_t master, const std::string& cell) { return derive_seed(master, cell + "/data"); }

std::string a_label(double a) { return "sparse_a=" + format_number(a); }

ExperimentResult failed_cell(const std::string& table, const std::string& dataset, const std::string& reason,
                             double wall) {
  ExperimentResult r;
  ResultRow row;
  row.table = table;
  row.dataset = dataset;
  row.metric = "all";
  row.wall_time = wall;
  row.status = "failed";
  row.note = reason;
  r.rows.push_back(std::move(row));
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Emits one row per metric for an already-fitted decomposition.
ExperimentResult report_rows(const std::string& table, const std::string& dataset, const MetricReport& report,
                             Index d, Index m, std::optional<double> true_sparsity, double wall) {
  ExperimentResult r;
  const std::vector<std::pair<std::string, std::optional<double>>> values = {
      {"nonzero_entries", report.nonzero_entries},
      {"final_loss", report.final_loss},
      {"avg_coeff_norm", report.avg_coeff_norm},
      {"normalized_loss", report.normalized_loss}};
  for (const auto& [name, value] : values) {
    ResultRow row;
    row.table = table;
    row.dataset = dataset;
    row.d = d;
    row.m = m;
    row.lambda = report.lambda_used;
    row.metric = name;
    row.value = value;
    row.variance_explained = report.variance_explained;
    row.true_sparsity = true_sparsity;
    row.wall_time = wall;
    if (!value) {
      row.status = "flagged";
      row.note = "undefined: all coefficients are zero";
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

void flag_low_variance(ExperimentResult& r, double threshold) {
  for (auto& row : r.rows) {
    if (row.status == "failed" || !row.variance_explained || *row.variance_explained >= threshold) continue;
    row.status = "flagged";
    if (!row.note.empty()) row.note += "; ";
    row.note += "variance explained below " + format_number(threshold);
  }
}

template <typename Body>
ExperimentResult guarded_cell(const std::string& table, const std::string& dataset, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    return body();
  } catch (const std::exception& e) {
    log::warn("cell " + table + "/" + dataset + " failed: " + e.what());
    return failed_cell(table, dataset, e.what(), seconds_since(start));
  }
}

SynthConfig synth_config(const ExperimentConfig& cfg, double a, std::uint64_t seed) {
  SynthConfig s;
  s.d = cfg.d;
  s.m_true = static_cast<Index>(std::llround(cfg.m_true_factor * static_cast<double>(cfg.d)));
  s.a = a;
  s.sigma = cfg.sigma;
  s.n = cfg.n;
  s.seed = seed;
  return s;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::discriminate: return "discriminate";
    case ExperimentKind::ablation: return "ablation";
    case ExperimentKind::layers: return "layers";
    case ExperimentKind::embeddings: return "embeddings";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  if (text == "sweep") return ExperimentKind::sweep;
  if (text == "discriminate" || text == "discrimination") return ExperimentKind::discriminate;
  if (text == "ablation" || text == "ablate") return ExperimentKind::ablation;
  if (text == "layers") return ExperimentKind::layers;
  if (text == "embeddings") return ExperimentKind::embeddings;
  throw InvalidArgument("unknown experiment kind '" + text + "'");
}

std::string to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::dict_16d: return "dict_16d";
    case AblationAxis::sigma_low: return "sigma_0.05";
    case AblationAxis::sigma_high: return "sigma_0.2";
    case AblationAxis::d_small: return "d_64";
    case AblationAxis::d_large: return "d_512";
    case AblationAxis::m_true_8d: return "m_true_8d";
  }
  return "unknown";
}

AblationAxis parse_ablation_axis(const std::string& text) {
  for (auto axis : {AblationAxis::dict_16d, AblationAxis::sigma_low, AblationAxis::sigma_high, AblationAxis::d_small,
                    AblationAxis::d_large, AblationAxis::m_true_8d})
    if (to_string(axis) == text) return axis;
  throw InvalidArgument("unknown ablation axis '" + text + "'");
}

SolverConfig ExperimentConfig::default_experiment_solver() {
  SolverConfig s;
  s.dict_factor = 8.0;
  s.adapt_lambda = true;
  s.step_rule = StepRule::lipschitz;
  s.step_size = 1.0;
  s.phi_steps = 5;
  s.batch_size = 256;
  s.max_alternations = 100;
  s.rel_tol = 1e-4;
  s.adapt_rounds = 5;
  return s;
}

ExperimentConfig ExperimentConfig::full_scale(ExperimentConfig base) {
  base.d = 256;
  base.n = 16384;
  return base;
}

void ExperimentConfig::validate() const {
  solver.validate();
  if (d < 1 || n < 1) throw InvalidArgument("d and n must be >= 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  if (!(m_true_factor > 0.0)) throw InvalidArgument("m_true_factor must be positive");
  switch (kind) {
    case ExperimentKind::sweep:
      if (a_grid.empty()) throw InvalidArgument("sweep needs a nonempty a_grid");
      break;
    case ExperimentKind::discriminate:
      if (discrimination_a.empty()) throw InvalidArgument("discrimination needs a nonempty discrimination_a");
      break;
    case ExperimentKind::ablation:
      if (ablation_axes.empty()) throw InvalidArgument("ablation needs at least one axis");
      if (a_grid.empty()) throw InvalidArgument("ablation needs a nonempty a_grid");
      break;
    case ExperimentKind::layers:
    case ExperimentKind::embeddings:
      if (datasets.empty()) throw InvalidArgument(to_string(kind) + " experiment needs at least one activation file");
      if (kind == ExperimentKind::embeddings && datasets.size() != 1)
        throw InvalidArgument("embeddings experiment takes exactly one activation file");
      for (const auto& p : datasets)
        if (!fs::exists(p)) throw InvalidArgument("activation file not found: " + p.string());
      break;
  }
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto& s = cfg.solver;
  if (key == "kind") cfg.kind = parse_experiment_kind(value);
  else if (key == "a_grid") cfg.a_grid = parse_double_list(key, value);
  else if (key == "discrimination_a") cfg.discrimination_a = parse_double_list(key, value);
  else if (key == "d") cfg.d = parse_int(key, value);
  else if (key == "n") cfg.n = parse_int(key, value);
  else if (key == "sigma") cfg.sigma = parse_double(key, value);
  else if (key == "m_true_factor") cfg.m_true_factor = parse_double(key, value);
  else if (key == "ablation_axes") {
    cfg.ablation_axes.clear();
    for (const auto& item : split_list(value)) cfg.ablation_axes.push_back(parse_ablation_axis(item));
  } else if (key == "ablation_discriminate") cfg.ablation_discriminate = parse_bool(key, value);
  else if (key == "datasets") {
    cfg.datasets.clear();
    for (const auto& item : split_list(value)) cfg.datasets.emplace_back(item);
  } else if (key == "layer_fit_lambda") cfg.layer_fit_lambda = parse_double(key, value);
  else if (key == "layer_infer_lambda") cfg.layer_infer_lambda = parse_double(key, value);
  else if (key == "layer_variance_threshold") cfg.layer_variance_threshold = parse_double(key, value);
  else if (key == "embedding_variance_threshold") cfg.embedding_variance_threshold = parse_double(key, value);
  else if (key == "output") cfg.output = value;
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "profile") {
    if (value == "full") cfg = ExperimentConfig::full_scale(cfg);
    else if (value != "desk") throw InvalidArgument("profile must be 'desk' or 'full'");
  } else if (key == "lambda") s.lambda = parse_double(key, value);
  else if (key == "dict_factor") s.dict_factor = parse_double(key, value);
  else if (key == "phi_steps") s.phi_steps = static_cast<int>(parse_int(key, value));
  else if (key == "step_size") s.step_size = parse_double(key, value);
  else if (key == "step_rule") {
    if (value == "plain") s.step_rule = StepRule::plain;
    else if (value == "lipschitz") s.step_rule = StepRule::lipschitz;
    else throw InvalidArgument("step_rule must be 'plain' or 'lipschitz'");
  } else if (key == "batch_size") s.batch_size = parse_int(key, value);
  else if (key == "max_alternations") s.max_alternations = static_cast<int>(parse_int(key, value));
  else if (key == "rel_tol") s.rel_tol = parse_double(key, value);
  else if (key == "adapt_lambda") s.adapt_lambda = parse_bool(key, value);
  else if (key == "adapt_rounds") s.adapt_rounds = static_cast<int>(parse_int(key, value));
  else throw InvalidArgument("unknown config key '" + key + "'");
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    apply_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

// ---------------------------------------------------------------------------
// ExperimentResult

void ExperimentResult::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.table, a.dataset, a.metric) < std::tie(b.table, b.dataset, b.metric);
  });
}

void ExperimentResult::append(const ExperimentResult& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

const ResultRow* ExperimentResult::find(const std::string& dataset, const std::string& metric,
                                        const std::string& table_name) const {
  for (const auto& row : rows)
    if (row.dataset == dataset && row.metric == metric && (table_name.empty() || row.table == table_name)) return &row;
  return nullptr;
}

std::optional<double> ExperimentResult::value(const std::string& dataset, const std::string& metric,
                                              const std::string& table_name) const {
  const ResultRow* row = find(dataset, metric, table_name);
  return row ? row->value : std::nullopt;
}

std::vector<std::string> ExperimentResult::tables() const {
  std::set<std::string> names;
  for (const auto& row : rows) names.insert(row.table);
  return {names.begin(), names.end()};
}

ExperimentResult ExperimentResult::table(const std::string& name) const {
  ExperimentResult out;
  for (const auto& row : rows)
    if (row.table == name) out.rows.push_back(row);
  return out;
}

std::string ExperimentResult::to_csv() const {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << "table,dataset,d,m,lambda,metric,value,variance_explained,true_sparsity,wall_time,status,note\n";
  for (const auto& r : rows) {
    out << csv_escape(r.table) << ',' << csv_escape(r.dataset) << ',' << r.d << ',' << r.m << ','
        << csv_number(r.lambda) << ',' << csv_escape(r.metric) << ',' << csv_number(r.value) << ','
        << csv_number(r.variance_explained) << ',' << csv_number(r.true_sparsity) << ','
        << csv_number(r.wall_time) << ',' << r.status << ',' << csv_escape(r.note) << '\n';
  }
  return out.str();
}

nlohmann::json ExperimentResult::to_json() const {
  nlohmann::json j;
  j["format_version"] = format_version;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"table", r.table},
                         {"dataset", r.dataset},
                         {"d", r.d},
                         {"m", r.m},
                         {"lambda", json_number(r.lambda)},
                         {"metric", r.metric},
                         {"value", json_number(r.value)},
                         {"variance_explained", json_number(r.variance_explained)},
                         {"true_sparsity", json_number(r.true_sparsity)},
                         {"wall_time", r.wall_time},
                         {"status", r.status},
                         {"note", r.note}});
  }
  return j;
}

ExperimentResult ExperimentResult::from_json(const nlohmann::json& j) {
  ExperimentResult out;
  out.format_version = j.at("format_version").get<int>();
  if (out.format_version != kFormatVersion)
    throw InvalidArgument("unsupported result format version " + std::to_string(out.format_version));
  for (const auto& jr : j.at("rows")) {
    ResultRow r;
    r.table = jr.at("table").get<std::string>();
    r.dataset = jr.at("dataset").get<std::string>();
    r.d = jr.at("d").get<Index>();
    r.m = jr.at("m").get<Index>();
    r.lambda = json_optional(jr, "lambda").value_or(0.0);
    r.metric = jr.at("metric").get<std::string>();
    r.value = json_optional(jr, "value");
    r.variance_explained = json_optional(jr, "variance_explained");
    r.true_sparsity = json_optional(jr, "true_sparsity");
    r.wall_time = jr.at("wall_time").get<double>();
    r.status = jr.at("status").get<std::string>();
    r.note = jr.at("note").get<std::string>();
    out.rows.push_back(std::move(r));
  }
  return out;
}

void ExperimentResult::write(const fs::path& stem) const {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  fs::path csv = stem;
  csv += ".csv";
  fs::path json = stem;
  json += ".json";
  const std::string csv_text = to_csv();
  const std::string json_text = to_json().dump(2) + "\n";
  write_bytes_atomic(csv, {csv_text.begin(), csv_text.end()});
  write_bytes_atomic(json, {json_text.begin(), json_text.end()});
}

// ---------------------------------------------------------------------------
// Drivers

ExperimentResult evaluate_cell(const std::string& table, const std::string& dataset, const ActivationSet& x,
                               const SolverConfig& solver, std::optional<double> true_sparsity) {
  return guarded_cell(table, dataset, [&] {
    const auto start = std::chrono::steady_clock::now();
    const FitResult fitted = fit(x, solver);
    const MetricReport report =
        compute_metrics(x, fitted.dictionary, fitted.coefficients, fitted.final_lambda);
    return report_rows(table, dataset, report, x.d(), fitted.dictionary.m(), true_sparsity, seconds_since(start));
  });
}

ExperimentResult run_sparsity_sweep(const ExperimentConfig& cfg, const std::string& table) {
  ExperimentConfig checked = cfg;
  checked.kind = ExperimentKind::sweep;
  checked.validate();
  ExperimentResult result;
  for (double a : cfg.a_grid) {
    const std::string dataset = a_label(a);
    const std::string cell = table + "/" + dataset;
    ExperimentResult rows = guarded_cell(table, dataset, [&] {
      const auto data = gen_sparse_linear(synth_config(cfg, a, data_seed(cfg.seed, cell)));
      // Noise is added after the proto-activations are centered; re-center the realized set.
      const ActivationSet x = center(data.activations).activations;
      return evaluate_cell(table, dataset, x, cell_solver(cfg.solver, cfg.seed, cell), data.truth.true_weighted_sparsity);
    });
    result.append(rows);
  }
  result.sort();
  return result;
}

ExperimentResult run_discrimination(const ExperimentConfig& cfg, const std::string& table) {
  ExperimentConfig checked = cfg;
  checked.kind = ExperimentKind::discriminate;
  checked.validate();
  ExperimentResult result;
  struct Dataset {
    std::string id;
    std::function<ActivationSet(std::uint64_t)> make;
    std::optional<double> truth;
  };
  std::vector<Dataset> datasets;
  for (double a : cfg.discrimination_a)
    datasets.push_back({a_label(a),
                        [&cfg, a](std::uint64_t seed) { return gen_sparse_linear(synth_config(cfg, a, seed)).activations; },
                        a / 2.0});
  datasets.push_back({"gaussian", [&cfg](std::uint64_t seed) { return gen_gaussian(cfg.d, cfg.n, seed); }, std::nullopt});
  datasets.push_back(
      {"heavy_tailed", [&cfg](std::uint64_t seed) { return gen_heavy_tailed(cfg.d, cfg.n, seed); }, std::nullopt});
  datasets.push_back(
      {"rademacher", [&cfg](std::uint64_t seed) { return gen_rademacher(cfg.d, cfg.n, seed); }, std::nullopt});

  for (const auto& ds : datasets) {
    const std::string cell = table + "/" + ds.id;
    result.append(guarded_cell(table, ds.id, [&] {
      const ActivationSet x = normalize_for_loss(ds.make(data_seed(cfg.seed, cell)));
      return evaluate_cell(table, ds.id, x, cell_solver(cfg.solver, cfg.seed, cell), ds.truth);
    }));
  }
  result.sort();
  return result;
}

ExperimentConfig ablation_variant(const ExperimentConfig& base, AblationAxis axis) {
  ExperimentConfig v = base;
  switch (axis) {
    case AblationAxis::dict_16d: v.solver.dict_factor = 16.0; break;
    case AblationAxis::sigma_low: v.sigma = 0.05; break;
    case AblationAxis::sigma_high: v.sigma = 0.2; break;
    case AblationAxis::d_small: v.d = 64; break;
    case AblationAxis::d_large: v.d = 512; break;
    case AblationAxis::m_true_8d: v.m_true_factor = 8.0; break;
  }
  return v;
}

ExperimentResult run_ablation_grid(const ExperimentConfig& cfg) {
  ExperimentConfig checked = cfg;
  checked.kind = ExperimentKind::ablation;
  checked.validate();
  ExperimentResult result;
  for (AblationAxis axis : cfg.ablation_axes) {
    const ExperimentConfig variant = ablation_variant(cfg, axis);
    const std::string name = "ablation:" + to_string(axis);
    result.append(run_sparsity_sweep(variant, name + ":sweep"));
    if (cfg.ablation_discriminate) result.append(run_discrimination(variant, name + ":discriminate"));
  }
  result.sort();
  return result;
}

ExperimentResult run_layer_sweep(const ExperimentConfig& cfg) {
  ExperimentConfig checked = cfg;
  checked.kind = ExperimentKind::layers;
  checked.validate();
  const std::string table = "layers";
  const double infer_lambda = cfg.layer_infer_lambda.value_or(cfg.layer_fit_lambda);
  SolverConfig solver = cfg.solver;
  solver.dict_factor = 16.0;
  solver.adapt_lambda = false;
  solver.lambda = cfg.layer_fit_lambda;

  ExperimentResult result;
  for (std::size_t layer = 0; layer < cfg.datasets.size(); ++layer) {
    const std::string dataset = "layer_" + std::to_string(layer);
    const std::string cell = table + "/" + dataset;
    ExperimentResult rows = guarded_cell(table, dataset, [&] {
      const auto start = std::chrono::steady_clock::now();
      const ActivationSet x = center(read_activations(cfg.datasets[layer])).activations;
      const FitResult fitted = fit(x, cell_solver(solver, cfg.seed, cell));
      const CoefficientSet alpha = infer_coefficients(x, fitted.dictionary, infer_lambda);
      const MetricReport report = compute_metrics(x, fitted.dictionary, alpha, infer_lambda);
      return report_rows(table, dataset, report, x.d(), fitted.dictionary.m(), std::nullopt, seconds_since(start));
    });
    flag_low_variance(rows, cfg.layer_variance_threshold);
    result.append(rows);
  }
  result.sort();
  return result;
}

ExperimentResult run_embedding_experiment(const ExperimentConfig& cfg) {
  ExperimentConfig checked = cfg;
  checked.kind = ExperimentKind::embeddings;
  checked.validate();
  const std::string table = "embeddings";
  const fs::path& file = cfg.datasets.front();
  std::string dataset = file.stem().string();
  const auto meta = read_metadata(file);
  if (meta.contains("model") && meta.at("model").is_string()) dataset = meta.at("model").get<std::string>();

  SolverConfig solver = cfg.solver;
  solver.dict_factor = 8.0;
  solver.adapt_lambda = true;

  ExperimentResult result;
  Index d = 0;
  Index n = 0;
  {
    const std::string cell = table + "/" + dataset;
    ExperimentResult rows = guarded_cell(table, dataset, [&] {
      const ActivationSet x = center(read_activations(file)).activations;
      d = x.d();
      n = x.n();
      return evaluate_cell(table, dataset, x, cell_solver(solver, cfg.seed, cell));
    });
    flag_low_variance(rows, cfg.embedding_variance_threshold);
    result.append(rows);
  }
  if (d > 0) {
    const std::string control = "gaussian_control";
    const std::string cell = table + "/" + control;
    ExperimentResult rows = guarded_cell(table, control, [&] {
      const ActivationSet x = center(gen_gaussian(d, n, data_seed(cfg.seed, cell))).activations;
      return evaluate_cell(table, control, x, cell_solver(solver, cfg.seed, cell));
    });
    result.append(rows);
  }
  result.sort();
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::sweep: return run_sparsity_sweep(cfg);
    case ExperimentKind::discriminate: return run_discrimination(cfg);
    case ExperimentKind::ablation: return run_ablation_grid(cfg);
    case ExperimentKind::layers: return run_layer_sweep(cfg);
    case ExperimentKind::embeddings: return run_embedding_experiment(cfg);
  }
  throw InvalidArgument("unknown experiment kind");
}

}  // namespace sparsemeter

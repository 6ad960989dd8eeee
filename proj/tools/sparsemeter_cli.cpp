// sparsemeter command line tool.
//
//   sparsemeter gen      synthetic or control dataset -> activation file
//   sparsemeter fit      activation file -> dictionary (+ coefficients)
//   sparsemeter metrics  activation file + dictionary -> metric report JSON
//   sparsemeter exp      sweep | discriminate | ablate | layers | embeddings -> CSV + JSON
//   sparsemeter report   features | nearest interpretation reports
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include "sparsemeter/experiments.hpp"
#include "sparsemeter/ingest.hpp"
#include "sparsemeter/log.hpp"
#include "sparsemeter/metrics.hpp"
#include "sparsemeter/solver.hpp"
#include "sparsemeter/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace sm = sparsemeter;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

// Flags recorded as config key/value pairs so a config file can be applied first
// and then overridden.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> items;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { items.emplace_back(key, v); }, help);
  }
};

void add_solver_flags(CLI::App* app, Overrides& o) {
  o.add(app, "--lambda", "lambda", "L1 weight (start value when adapting)");
  o.add(app, "--dict-factor", "dict_factor", "dictionary size as a multiple of d");
  o.add(app, "--phi-steps", "phi_steps", "gradient steps per alternation");
  o.add(app, "--step-size", "step_size", "dictionary gradient step");
  o.add(app, "--step-rule", "step_rule", "plain | lipschitz");
  o.add(app, "--batch-size", "batch_size", "minibatch rows per gradient step");
  o.add(app, "--max-alternations", "max_alternations", "alternation budget");
  o.add(app, "--rel-tol", "rel_tol", "relative objective change that stops a fit");
  o.add(app, "--adapt-lambda", "adapt_lambda", "true | false");
  o.add(app, "--adapt-rounds", "adapt_rounds", "adaptive lambda round budget");
  o.add(app, "--seed", "seed", "master seed");
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw sm::InvalidArgument("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

sm::ExperimentConfig load_config(const std::string& config_path, const Overrides& o,
                                 const std::vector<std::string>& sets) {
  sm::ExperimentConfig cfg;
  if (!config_path.empty()) sm::apply_config_text(cfg, slurp(config_path));
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw sm::InvalidArgument("--set expects key=value, got '" + s + "'");
    sm::apply_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : o.items) sm::apply_config_value(cfg, k, v);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  sm::write_bytes_atomic(path, {text.begin(), text.end()});
}

fs::path fit_summary_path(const fs::path& dict) {
  fs::path p = dict;
  p += ".fit.json";
  return p;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string kind = "sparse";
  sm::Index d = 64;
  sm::Index n = 8192;
  double a = 8.0;
  double sigma = 0.1;
  sm::Index m_true = 0;
  std::uint64_t seed = 0;
  bool normalize = false;
  std::string out;
  std::string truth;
};

int run_gen(const GenArgs& g) {
  sm::ActivationSet x = [&] {
    if (g.kind == "sparse") {
      sm::SynthConfig cfg{g.d, g.m_true, g.a, g.sigma, g.n, g.seed};
      auto data = sm::gen_sparse_linear(cfg);
      if (!g.truth.empty()) {
        sm::write_dictionary(g.truth + ".dict", data.truth.features);
        sm::write_coefficients(g.truth + ".coef", data.truth.coefficients);
      }
      return data.activations;
    }
    if (g.kind == "gaussian") return sm::gen_gaussian(g.d, g.n, g.seed);
    if (g.kind == "heavy_tailed") return sm::gen_heavy_tailed(g.d, g.n, g.seed);
    if (g.kind == "rademacher") return sm::gen_rademacher(g.d, g.n, g.seed);
    throw sm::InvalidArgument("unknown dataset kind '" + g.kind + "'");
  }();
  if (g.normalize) x = sm::normalize_for_loss(x);
  nlohmann::json meta = {{"generator", g.kind}, {"d", g.d}, {"n", g.n}, {"seed", g.seed}, {"normalized", g.normalize}};
  if (g.kind == "sparse") {
    meta["a"] = g.a;
    meta["sigma"] = g.sigma;
    meta["m_true"] = g.m_true > 0 ? g.m_true : 4 * g.d;
  }
  sm::write_activations(g.out, x, meta);
  std::cout << "wrote " << g.out << " (n=" << x.n() << ", d=" << x.d() << ")\n";
  return kExitOk;
}

struct FitArgs {
  std::string input;
  std::string dict;
  std::string coeffs;
  std::string config;
  std::vector<std::string> sets;
  bool no_center = false;
};

int run_fit(const FitArgs& f, const Overrides& o) {
  const sm::ExperimentConfig cfg = load_config(f.config, o, f.sets);
  cfg.solver.validate();
  sm::ActivationSet x = sm::read_activations(f.input);
  if (!f.no_center) x = sm::center(x).activations;
  const sm::FitResult r = sm::fit(x, cfg.solver);
  sm::write_dictionary(f.dict, r.dictionary);
  if (!f.coeffs.empty()) sm::write_coefficients(f.coeffs, r.coefficients);
  nlohmann::json summary = {{"input", f.input},
                            {"d", x.d()},
                            {"m", r.dictionary.m()},
                            {"n", x.n()},
                            {"centered", !f.no_center},
                            {"final_lambda", r.final_lambda},
                            {"lambda_history", r.lambda_history},
                            {"objective_history", r.objective_history},
                            {"residual_norm_sq", r.residual_norm_sq}};
  const std::string text = summary.dump(2) + "\n";
  write_text(fit_summary_path(f.dict), text);
  std::cout << text;
  return kExitOk;
}

struct MetricsArgs {
  std::string input;
  std::string dict;
  std::string coeffs;
  std::optional<double> lambda;
  double p = 1.0;
  bool no_center = false;
  std::string out;
};

double resolve_lambda(const std::optional<double>& given, const std::string& dict) {
  if (given) return *given;
  const fs::path summary = fit_summary_path(dict);
  if (!fs::exists(summary))
    throw sm::InvalidArgument("no --lambda given and no fit summary at " + summary.string());
  return nlohmann::json::parse(slurp(summary)).at("final_lambda").get<double>();
}

int run_metrics(const MetricsArgs& a) {
  sm::ActivationSet x = sm::read_activations(a.input);
  if (!a.no_center) x = sm::center(x).activations;
  const sm::Dictionary phi = sm::read_dictionary(a.dict);
  const double lambda = resolve_lambda(a.lambda, a.dict);
  const sm::CoefficientSet alpha =
      a.coeffs.empty() ? sm::infer_coefficients(x, phi, lambda) : sm::read_coefficients(a.coeffs);
  const sm::MetricReport report = sm::compute_metrics(x, phi, alpha, lambda, a.p);
  write_text(a.out, report.to_json() + "\n");
  return kExitOk;
}

struct ExpArgs {
  std::string kind;
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

int run_exp(const ExpArgs& e, const Overrides& o) {
  sm::ExperimentConfig cfg = load_config(e.config, o, e.sets);
  cfg.kind = sm::parse_experiment_kind(e.kind);
  if (!e.out.empty()) cfg.output = e.out;
  if (cfg.output.empty()) cfg.output = fs::path("results") / sm::to_string(cfg.kind);
  cfg.validate();
  const sm::ExperimentResult result = sm::run_experiment(cfg);
  result.write(cfg.output);

  int failed = 0;
  for (const auto& row : result.rows) {
    if (row.status == "failed") ++failed;
    if (row.metric != "avg_coeff_norm" && row.status == "ok") continue;
    std::cout << row.table << "  " << row.dataset << "  " << row.metric << " = "
              << (row.value ? std::to_string(*row.value) : std::string("null"));
    if (row.variance_explained) std::cout << "  ve=" << *row.variance_explained;
    if (row.status != "ok") std::cout << "  [" << row.status << ": " << row.note << "]";
    std::cout << "\n";
  }
  std::cout << "wrote " << cfg.output.string() << ".csv and .json (" << result.rows.size() << " rows)\n";
  return failed > 0 ? kExitNumerical : kExitOk;
}

struct ReportArgs {
  std::string input;
  std::string dict;
  std::optional<double> lambda;
  std::string token;
  sm::Index k_features = 3;
  sm::Index k_tokens = 20;
  sm::Index k = 30;
  std::string rank = "coefficient";
  bool no_center = false;
  std::string out;
};

int run_report_features(const ReportArgs& r) {
  sm::ActivationSet x = sm::read_activations(r.input);
  if (!r.no_center) x = sm::center(x).activations;
  const sm::Dictionary phi = sm::read_dictionary(r.dict);
  sm::ActivationRanking ranking;
  if (r.rank == "coefficient") ranking = sm::ActivationRanking::coefficient;
  else if (r.rank == "dot") ranking = sm::ActivationRanking::dot_product;
  else throw sm::InvalidArgument("--rank must be 'coefficient' or 'dot'");
  const auto report =
      sm::feature_report(phi, x, resolve_lambda(r.lambda, r.dict), r.token, r.k_features, r.k_tokens, ranking);
  write_text(r.out, report.to_json().dump(2) + "\n");
  return kExitOk;
}

int run_report_nearest(const ReportArgs& r) {
  const sm::ActivationSet x = sm::read_activations(r.input);
  nlohmann::json j = {{"query", r.token}, {"nearest", nlohmann::json::array()}};
  for (const auto& t : sm::nearest_embedding_report(x, r.token, r.k))
    j["nearest"].push_back({{"label", t.label}, {"row", t.row}, {"cosine", t.cosine}});
  write_text(r.out, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse dictionary learning and sparsity metrics"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "progress logging");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic or control dataset");
  gen_cmd->add_option("--kind", gen.kind, "sparse | gaussian | heavy_tailed | rademacher")
      ->check(CLI::IsMember({"sparse", "gaussian", "heavy_tailed", "rademacher"}));
  gen_cmd->add_option("--d", gen.d, "embedding size")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen.n, "sample count")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--a", gen.a, "expected active features (sparse)");
  gen_cmd->add_option("--sigma", gen.sigma, "noise scale (sparse)");
  gen_cmd->add_option("--m-true", gen.m_true, "ground-truth feature count, 0 = 4d (sparse)");
  gen_cmd->add_option("--seed", gen.seed, "seed");
  gen_cmd->add_flag("--normalize", gen.normalize, "center and scale to mean row norm 1");
  gen_cmd->add_option("--truth", gen.truth, "write ground truth to <stem>.dict and <stem>.coef");
  gen_cmd->add_option("-o,--out", gen.out, "output activation file")->required();

  FitArgs fit;
  Overrides fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "fit a dictionary to an activation file");
  fit_cmd->add_option("-i,--input", fit.input, "activation file")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--dict", fit.dict, "output dictionary file")->required();
  fit_cmd->add_option("--coeffs", fit.coeffs, "output coefficient file");
  fit_cmd->add_option("-c,--config", fit.config, "key=value config file")->check(CLI::ExistingFile);
  fit_cmd->add_option("--set", fit.sets, "key=value override (repeatable)");
  fit_cmd->add_flag("--no-center", fit.no_center, "fit the raw activations");
  add_solver_flags(fit_cmd, fit_flags);

  MetricsArgs met;
  auto* met_cmd = app.add_subcommand("metrics", "compute sparsity metrics for a fitted dictionary");
  met_cmd->add_option("-i,--input", met.input, "activation file")->required()->check(CLI::ExistingFile);
  met_cmd->add_option("--dict", met.dict, "dictionary file")->required()->check(CLI::ExistingFile);
  met_cmd->add_option("--coeffs", met.coeffs, "coefficient file (inferred at lambda when omitted)");
  met_cmd->add_option("--lambda", met.lambda, "lambda (default: the fit summary's final lambda)");
  met_cmd->add_option("--p", met.p, "exponent of the average coefficient norm")->check(CLI::PositiveNumber);
  met_cmd->add_flag("--no-center", met.no_center, "use the raw activations");
  met_cmd->add_option("-o,--out", met.out, "output JSON (stdout when omitted)");

  ExpArgs exp;
  Overrides exp_flags;
  auto* exp_cmd = app.add_subcommand("exp", "run an experiment protocol");
  exp_cmd->add_option("kind", exp.kind, "sweep | discriminate | ablate | layers | embeddings")
      ->required()
      ->check(CLI::IsMember({"sweep", "discriminate", "ablate", "layers", "embeddings"}));
  exp_cmd->add_option("-c,--config", exp.config, "key=value config file")->check(CLI::ExistingFile);
  exp_cmd->add_option("--set", exp.sets, "key=value override (repeatable)");
  exp_cmd->add_option("-o,--out", exp.out, "output stem for .csv and .json");
  exp_flags.add(exp_cmd, "--d", "d", "embedding size");
  exp_flags.add(exp_cmd, "--n", "n", "sample count");
  exp_flags.add(exp_cmd, "--sigma", "sigma", "noise scale");
  exp_flags.add(exp_cmd, "--a-grid", "a_grid", "comma-separated sweep grid");
  exp_flags.add(exp_cmd, "--datasets", "datasets", "comma-separated activation files");
  exp_flags.add(exp_cmd, "--profile", "profile", "desk | full");
  add_solver_flags(exp_cmd, exp_flags);

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "interpretation reports for labeled activations");
  rep_cmd->require_subcommand(1);
  auto* feat_cmd = rep_cmd->add_subcommand("features", "top features of a token and their top tokens");
  auto* near_cmd = rep_cmd->add_subcommand("nearest", "nearest rows by cosine similarity");
  for (auto* c : {feat_cmd, near_cmd}) {
    c->add_option("-i,--input", rep.input, "labeled activation file")->required()->check(CLI::ExistingFile);
    c->add_option("--token", rep.token, "query label")->required();
    c->add_option("-o,--out", rep.out, "output JSON (stdout when omitted)");
  }
  feat_cmd->add_option("--dict", rep.dict, "dictionary file")->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--lambda", rep.lambda, "lambda (default: the fit summary's final lambda)");
  feat_cmd->add_option("--k-features", rep.k_features, "features to report")->check(CLI::PositiveNumber);
  feat_cmd->add_option("--k-tokens", rep.k_tokens, "tokens per feature")->check(CLI::PositiveNumber);
  feat_cmd->add_option("--rank", rep.rank, "coefficient | dot")->check(CLI::IsMember({"coefficient", "dot"}));
  feat_cmd->add_flag("--no-center", rep.no_center, "use the raw activations");
  near_cmd->add_option("--k", rep.k, "neighbours to report")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (verbose) sm::log::set_level(sm::log::Level::info);
  if (quiet) sm::log::set_level(sm::log::Level::quiet);

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*fit_cmd) return run_fit(fit, fit_flags);
    if (*met_cmd) return run_metrics(met);
    if (*exp_cmd) return run_exp(exp, exp_flags);
    if (*feat_cmd) return run_report_features(rep);
    if (*near_cmd) return run_report_nearest(rep);
  } catch (const sm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

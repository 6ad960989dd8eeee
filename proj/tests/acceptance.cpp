// Acceptance run: one PASS/FAIL line per criterion, followed by the numbers
// behind it. Exits 0 when every check ran (whatever the verdicts); with
// --strict, exits 3 if any verdict is FAIL.

#include "sparsemeter/experiments.hpp"
#include "sparsemeter/ingest.hpp"
#include "sparsemeter/log.hpp"
#include "sparsemeter/metrics.hpp"
#include "sparsemeter/solver.hpp"
#include "sparsemeter/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace sm = sparsemeter;

namespace {

struct Verdict {
  std::string id;
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string pct(double rel) { return (rel >= 0 ? "+" : "") + fmt(100.0 * rel, 1) + "%"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string a_name(double a) {
  std::ostringstream os;
  os << "sparse_a=" << a;
  return os.str();
}

double metric(const sm::ExperimentResult& r, const std::string& dataset, const std::string& name) {
  const auto v = r.value(dataset, name);
  return v ? *v : std::nan("");
}

// S1 of the generator's own coefficients, in expectation: the support size K is
// ~Poisson(a), E[sum] = a/2 and E[max of K uniforms] = E[K/(K+1)] = 1 - (1 - e^-a)/a.
// This is what a perfect recovery would score, and it sits above a/2 for small a.
double exact_recovery_s1(double a) { return (a / 2.0) / (1.0 - (1.0 - std::exp(-a)) / a); }

// Both S1 and L_norm within +-tol of a/2 for every a.
bool tracking(const sm::ExperimentResult& r, const std::vector<double>& grid, double tol, const std::string& label,
              std::vector<std::string>& details) {
  bool ok = true;
  for (double a : grid) {
    const double truth = a / 2.0;
    const double s1 = metric(r, a_name(a), "avg_coeff_norm");
    const double ln = metric(r, a_name(a), "normalized_loss");
    const double e1 = s1 / truth - 1.0, e2 = ln / truth - 1.0;
    const bool cell = std::abs(e1) <= tol && std::abs(e2) <= tol;  // NaN fails
    ok = ok && cell;
    details.push_back(label + " a=" + fmt(a, 0) + " target " + fmt(truth, 1) + ": S1 " + fmt(s1) + " (" + pct(e1) +
                      "), L_norm " + fmt(ln) + " (" + pct(e2) + "); exact recovery would give S1 " +
                      fmt(exact_recovery_s1(a)) + (cell ? "" : "  <- outside +-" + fmt(100 * tol, 0) + "%"));
  }
  return ok;
}

const std::vector<std::string> kControls = {"gaussian", "heavy_tailed", "rademacher"};

// Every sparse value times its margin stays at or below the smallest control value, for S1 and L_norm.
bool separation(const sm::ExperimentResult& r, const std::vector<double>& sparse_a,
                const std::function<double(double)>& margin, const std::string& label,
                std::vector<std::string>& details) {
  bool ok = true;
  for (const std::string name : {"avg_coeff_norm", "normalized_loss"}) {
    double control_min = INFINITY;
    for (const auto& c : kControls) control_min = std::min(control_min, metric(r, c, name));
    for (double a : sparse_a) {
      const double v = metric(r, a_name(a), name);
      const bool cell = v * margin(a) <= control_min;
      ok = ok && cell;
      details.push_back(label + " " + name + ": a=" + fmt(a, 0) + " " + fmt(v) + " vs control min " + fmt(control_min) +
                        " (ratio " + fmt(control_min / v, 2) + ", need >= " + fmt(margin(a), 2) + ")" +
                        (cell ? "" : "  <- too close"));
    }
  }
  return ok;
}

// A control "overlaps" the sparse datasets on a metric when its value stays
// below 1.5x the largest sparse value, i.e. the metric does not set it apart.
bool overlaps_sparse(const sm::ExperimentResult& r, const std::vector<double>& sparse_a, const std::string& control,
                     const std::string& name, std::vector<std::string>& details) {
  double lo = INFINITY, hi = -INFINITY;
  for (double a : sparse_a) {
    lo = std::min(lo, metric(r, a_name(a), name));
    hi = std::max(hi, metric(r, a_name(a), name));
  }
  const double v = metric(r, control, name);
  const bool overlap = v < 1.5 * hi;
  details.push_back(control + " " + name + " " + fmt(v, 4) + " vs sparse range [" + fmt(lo, 4) + ", " + fmt(hi, 4) +
                    "], limit 1.5 x max = " + fmt(1.5 * hi, 4) + (overlap ? " (overlaps)" : "  <- separated"));
  return overlap;
}

bool no_failed_rows(const sm::ExperimentResult& r, std::vector<std::string>& details) {
  bool ok = true;
  for (const auto& row : r.rows)
    if (row.status == "failed") {
      ok = false;
      details.push_back("failed cell " + row.table + "/" + row.dataset + ": " + row.note);
    }
  return ok;
}

// ---- configurations ---------------------------------------------------------

sm::ExperimentConfig desk_base(std::uint64_t seed) {
  sm::ExperimentConfig cfg;
  cfg.d = 64;
  cfg.n = 8192;
  cfg.sigma = 0.1;
  cfg.m_true_factor = 4.0;
  cfg.a_grid = {4, 8, 16};
  cfg.discrimination_a = {5, 10, 20};
  cfg.seed = seed;
  return cfg;
}

// ---- exact identities -------------------------------------------------------

sm::Dictionary random_dictionary(sm::Index d, sm::Index m, sm::Rng& rng) {
  sm::Matrix f(d, m);
  for (sm::Index i = 0; i < m; ++i) f.col(i) = sm::random_unit_vector(d, rng);
  return sm::Dictionary(std::move(f));
}

sm::CoefficientSet random_coefficients(sm::Index m, sm::Index n, double density, sm::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<sm::CoefficientEntry>> cols(static_cast<std::size_t>(n));
  for (sm::Index j = 0; j < n; ++j)
    for (sm::Index i = 0; i < m; ++i)
      if (u(rng) < density) cols[static_cast<std::size_t>(j)].push_back({i, 0.01 + 2.0 * u(rng)});
  return sm::CoefficientSet::from_columns(m, cols);
}

Verdict exact_identities() {
  Verdict v{"exact_identities", true, "", {}};
  sm::Rng rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // L_norm = S1 when the reconstruction is exact.
  double worst_zero = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto phi = random_dictionary(8, 24, rng);
    const auto alpha = random_coefficients(24, 30, 0.2, rng);
    if (alpha.nonzeros() == 0) continue;
    const sm::ActivationSet x(sm::reconstruct(phi, alpha));
    const double lambda = 0.01 + 2.0 * u(rng);
    const double ln = *sm::metric_normalized_loss(x, phi, alpha, lambda);
    const double s1 = *sm::metric_avg_coeff_norm(alpha);
    worst_zero = std::max(worst_zero, std::abs(ln - s1));
  }
  const bool zero_ok = worst_zero <= 1e-6;
  v.details.push_back("zero residual: max |L_norm - S1| = " + sci(worst_zero) + " over 200 instances (tol 1e-6)");

  // Each greedy inclusion lowers the per-sample objective by exactly c^2.
  double worst_step = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const sm::Index d = 2 + static_cast<sm::Index>(u(rng) * 14), m = d + static_cast<sm::Index>(u(rng) * 3 * d);
    const auto phi = random_dictionary(d, m, rng);
    sm::Vector x(d);
    std::normal_distribution<double> g(0.0, 1.0);
    for (sm::Index k = 0; k < d; ++k) x(k) = g(rng);
    const double lambda = 0.5 * u(rng);
    const auto trace = sm::alpha_step_traced(x, phi, lambda);
    sm::Vector r = x;
    double l1 = 0.0, before = r.squaredNorm();
    for (const auto& sel : trace.selections) {
      r -= sel.value * phi.feature(sel.feature);
      l1 += sel.value;
      const double after = r.squaredNorm() + lambda * l1;
      worst_step = std::max(worst_step, std::abs((before - after) - sel.value * sel.value));
      before = after;
    }
  }
  const bool step_ok = worst_step <= 1e-6;
  v.details.push_back("greedy step: max |objective decrease - c^2| = " + sci(worst_step) +
                      " over 1000 instances (tol 1e-6)");

  // Joint positive rescaling leaves S_p and L_norm unchanged.
  double worst_scale = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto phi = random_dictionary(6, 18, rng);
    const auto x = sm::gen_gaussian(6, 80, 1000 + static_cast<std::uint64_t>(t));
    const double lambda = 0.1 + 0.4 * u(rng);
    const auto alpha = sm::alpha_step(x, phi, lambda);
    if (alpha.nonzeros() == 0) continue;
    for (double c : {1e-3, 0.5, 3.0, 1e4}) {
      const auto xs = x.scaled(c);
      const auto as = alpha.scaled(c);
      for (double p : {0.5, 1.0, 2.0}) {
        const double base = *sm::metric_avg_coeff_norm(alpha, p);
        worst_scale = std::max(worst_scale, std::abs(*sm::metric_avg_coeff_norm(as, p) / base - 1.0));
      }
      const double base = *sm::metric_normalized_loss(x, phi, alpha, lambda);
      worst_scale = std::max(worst_scale, std::abs(*sm::metric_normalized_loss(xs, phi, as, c * lambda) / base - 1.0));
    }
  }
  const bool scale_ok = worst_scale <= 1e-9;
  v.details.push_back("rescaling: max relative change of S_p (p = 0.5, 1, 2) and L_norm = " + sci(worst_scale) +
                      " for c in {1e-3, 0.5, 3, 1e4} (tol 1e-9)");

  v.pass = zero_ok && step_ok && scale_ok;
  v.summary = "zero-residual L_norm = S1, greedy decrease = c^2, rescaling invariance";
  return v;
}

// ---- format -----------------------------------------------------------------

Verdict format_round_trip(const fs::path& data_dir, const fs::path& work) {
  Verdict v{"format_round_trip", false, "", {}};
  const fs::path golden = data_dir / "golden.actv";
  const fs::path first = work / "golden_copy.actv";
  const fs::path second = work / "golden_copy2.actv";
  try {
    sm::write_activations(first, sm::read_activations(golden), sm::read_metadata(golden));
    sm::write_activations(second, sm::read_activations(first), sm::read_metadata(first));
    bool same = true;
    for (const auto& [a, b] : std::vector<std::pair<fs::path, fs::path>>{
             {golden, first},
             {first, second},
             {sm::labels_path(golden), sm::labels_path(first)},
             {sm::metadata_path(golden), sm::metadata_path(first)},
             {sm::labels_path(first), sm::labels_path(second)},
             {sm::metadata_path(first), sm::metadata_path(second)}}) {
      const bool eq = sm::read_bytes(a) == sm::read_bytes(b);
      same = same && eq;
      v.details.push_back(a.filename().string() + " vs " + b.filename().string() + ": " +
                          std::to_string(sm::read_bytes(b).size()) + " bytes, " + (eq ? "identical" : "DIFFERENT"));
    }
    v.pass = same;
  } catch (const std::exception& e) {
    v.details.push_back(std::string("error: ") + e.what());
  }
  v.summary = "golden fixture read -> write -> read -> write is byte identical (payload, labels, metadata)";
  return v;
}

void print(std::ostream& os, const Verdict& v) {
  os << (v.pass ? "PASS " : "FAIL ") << v.id << ": " << v.summary << "\n";
  for (const auto& line : v.details) os << "    " << line << "\n";
  os.flush();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsemeter acceptance run"};
  std::string out = "acceptance";
  fs::path data_dir = SPARSEMETER_TEST_DATA;
  std::uint64_t seed = 1;
  sm::Index disc_d = 128;
  bool strict = false;
  app.add_option("-o,--out", out, "directory for result tables");
  app.add_option("--data", data_dir, "fixture directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--discrimination-d", disc_d, "embedding size for the discrimination run (128 or 256)");
  app.add_flag("--strict", strict, "exit 3 when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  sm::log::set_level(sm::log::Level::warn);
  const fs::path work(out);
  fs::create_directories(work);
  const auto t_all = std::chrono::steady_clock::now();
  std::vector<Verdict> verdicts;
  std::ofstream log_file(work / "verdicts.txt");
  auto emit = [&](Verdict v) {
    print(std::cout, v);
    print(log_file, v);
    verdicts.push_back(std::move(v));
  };

  // Identities and format first: cheap and independent of the long runs.
  emit(exact_identities());
  emit(format_round_trip(data_dir, work));

  // Sweep at desk scale.
  const sm::ExperimentConfig base = desk_base(seed);
  auto t0 = std::chrono::steady_clock::now();
  const sm::ExperimentResult sweep = sm::run_sparsity_sweep(base, "sweep");
  const double sweep_seconds = seconds_since(t0);
  sweep.write(work / "sweep");
  {
    Verdict v{"sweep_tracking", false, "", {}};
    const bool track = tracking(sweep, base.a_grid, 0.25, "sweep", v.details);
    const bool fast = sweep_seconds <= 900.0;
    const bool clean = no_failed_rows(sweep, v.details);
    v.details.push_back("runtime " + fmt(sweep_seconds, 1) + " s (limit 900 s)");
    v.pass = track && fast && clean;
    v.summary = "d=64, m_true=256, dict 8d, sigma 0.1, n=8192, a in {4, 8, 16}: S1 and L_norm within +-25% of a/2";
    emit(v);
  }
  {
    Verdict v{"overestimation_ordering", true, "N0 >= S1 in every sweep cell", {}};
    for (double a : base.a_grid) {
      const double n0 = metric(sweep, a_name(a), "nonzero_entries");
      const double s1 = metric(sweep, a_name(a), "avg_coeff_norm");
      const bool ok = n0 >= s1;
      v.pass = v.pass && ok;
      v.details.push_back("a=" + fmt(a, 0) + ": N0 " + fmt(n0) + ", S1 " + fmt(s1) + (ok ? "" : "  <- violated"));
    }
    emit(v);
  }

  // Discrimination.
  sm::ExperimentConfig disc_cfg = base;
  disc_cfg.d = disc_d;
  t0 = std::chrono::steady_clock::now();
  const sm::ExperimentResult disc = sm::run_discrimination(disc_cfg, "discriminate");
  disc.write(work / "discriminate");
  {
    Verdict v{"discrimination", false, "", {}};
    const bool sep = separation(disc, disc_cfg.discrimination_a, [](double) { return 1.5; }, "d=" + std::to_string(disc_d),
                                v.details);
    const bool heavy = overlaps_sparse(disc, disc_cfg.discrimination_a, "heavy_tailed", "nonzero_entries", v.details);
    const bool gauss = overlaps_sparse(disc, disc_cfg.discrimination_a, "gaussian", "final_loss", v.details);
    const bool clean = no_failed_rows(disc, v.details);
    v.details.push_back("runtime " + fmt(seconds_since(t0), 1) + " s");
    v.pass = sep && heavy && gauss && clean;
    v.summary = "d=" + std::to_string(disc_d) +
                ", sparse a in {5, 10, 20} vs gaussian/heavy-tailed/rademacher: 1.5x separation on S1 and L_norm; "
                "heavy-tailed N0 and gaussian final loss overlap the sparse range";
    emit(v);
  }

  // Ablations, one axis at a time from the desk defaults.
  {
    Verdict v{"ablation_robustness", true, "", {}};
    t0 = std::chrono::steady_clock::now();
    sm::ExperimentResult all;
    auto axis_sweep = [&](sm::AblationAxis axis, const std::vector<double>& grid, double tol) {
      sm::ExperimentConfig cfg = sm::ablation_variant(base, axis);
      cfg.a_grid = grid;
      const std::string name = "ablation:" + sm::to_string(axis);
      const auto t_axis = std::chrono::steady_clock::now();
      const auto r = sm::run_sparsity_sweep(cfg, name + ":sweep");
      all.append(r);
      const bool ok = tracking(r, grid, tol, sm::to_string(axis), v.details) && no_failed_rows(r, v.details);
      v.details.push_back(sm::to_string(axis) + (ok ? " tracks" : " does NOT track") + " (" +
                          fmt(seconds_since(t_axis), 1) + " s)");
      return ok;
    };
    bool ok = true;
    ok &= axis_sweep(sm::AblationAxis::dict_16d, {4, 8, 16}, 0.25);
    ok &= axis_sweep(sm::AblationAxis::sigma_low, {4, 8, 16}, 0.25);
    ok &= axis_sweep(sm::AblationAxis::sigma_high, {4, 8, 16}, 0.25);
    // d = 64 is the desk sweep itself; its discrimination uses the relaxed margin for a = 20.
    const bool d64_track = tracking(sweep, base.a_grid, 0.25, "d_64 (desk sweep)", v.details);
    sm::ExperimentConfig d64 = sm::ablation_variant(base, sm::AblationAxis::d_small);
    const auto t_d64 = std::chrono::steady_clock::now();
    const auto d64_disc = sm::run_discrimination(d64, "ablation:d_64:discriminate");
    all.append(d64_disc);
    const bool d64_sep = separation(d64_disc, d64.discrimination_a, [](double a) { return a >= 20 ? 1.1 : 1.5; },
                                    "d_64", v.details) &&
                         no_failed_rows(d64_disc, v.details);
    v.details.push_back(std::string("d_64 ") + (d64_track && d64_sep ? "holds" : "does NOT hold") + " (" +
                        fmt(seconds_since(t_d64), 1) + " s)");
    ok &= d64_track && d64_sep;
    ok &= axis_sweep(sm::AblationAxis::d_large, {4, 8, 16}, 0.25);
    ok &= axis_sweep(sm::AblationAxis::m_true_8d, {8, 16, 32}, 0.30);
    all.sort();
    all.write(work / "ablation");
    v.pass = ok;
    v.details.push_back("runtime " + fmt(seconds_since(t0), 1) + " s");
    v.summary =
        "tracking (+-25%) with dict 16d, sigma 0.05 and 0.2, d 64 and 512; d=64 separation 1.5x (1.1x for a=20); "
        "m_true 8d tracking at a in {8, 16, 32} (+-30%)";
    emit(v);
  }

  // Variance explained.
  {
    Verdict v{"variance_explained", true, "", {}};
    double worst_synth = INFINITY;
    for (const auto* r : {&sweep, &disc})
      for (const auto& row : r->rows)
        if (row.metric == "avg_coeff_norm" && row.dataset.rfind("sparse_a=", 0) == 0)
          worst_synth = std::min(worst_synth, row.variance_explained.value_or(-INFINITY));
    const bool synth_ok = worst_synth >= 0.90;
    v.details.push_back("synthetic sweep and discrimination fits: min variance explained " + fmt(worst_synth, 4) +
                        " (need >= 0.90)");

    sm::ExperimentConfig layers;
    layers.kind = sm::ExperimentKind::layers;
    layers.seed = seed;
    for (int i = 0; i < 3; ++i) layers.datasets.push_back(data_dir / ("layer_" + std::to_string(i) + ".actv"));
    bool layer_ok = true;
    try {
      const auto r = sm::run_layer_sweep(layers);
      r.write(work / "layers");
      for (int i = 0; i < 3; ++i) {
        const auto* row = r.find("layer_" + std::to_string(i), "normalized_loss");
        const double ve = row && row->variance_explained ? *row->variance_explained : -INFINITY;
        layer_ok = layer_ok && ve >= 0.98;
        v.details.push_back("layer_" + std::to_string(i) + " fixture: variance explained " + fmt(ve, 4) +
                            " (need >= 0.98), L_norm " + fmt(row && row->value ? *row->value : NAN));
      }
    } catch (const std::exception& e) {
      layer_ok = false;
      v.details.push_back(std::string("layer sweep error: ") + e.what());
    }
    v.pass = synth_ok && layer_ok;
    v.summary = "synthetic fits >= 0.90, layer-sweep fixtures >= 0.98";
    emit(v);
  }

  {
    Verdict v{"full_scale_scope", true, "", {}};
    v.summary = "full-scale claims are NOT reproduced at desk scale; stated explicitly";
    v.details = {
        "not reproduced: the embedding-size trend across real model families,",
        "the cross-layer U-shape on real transformer activations, and the per-model interpretation tables.",
        "They are replaced by the fixture-based checks above (synthetic sweep, discrimination, ablations,",
        "checked-in layer fixtures). This run used only files under " + data_dir.string() +
            " and needed no exporter or model download.",
    };
    for (const char* f : {"golden.actv", "layer_0.actv", "layer_1.actv", "layer_2.actv"})
      if (!fs::exists(data_dir / f)) {
        v.pass = false;
        v.details.push_back(std::string("missing fixture ") + f);
      }
    emit(v);
  }

  int failed = 0;
  for (const auto& v : verdicts) failed += v.pass ? 0 : 1;
  const std::string tally = std::to_string(verdicts.size() - static_cast<std::size_t>(failed)) + " passed, " +
                            std::to_string(failed) + " failed, " + fmt(seconds_since(t_all), 1) + " s total";
  std::cout << "\n" << tally << "; tables in " << fs::absolute(work).string() << "\n";
  log_file << "\n" << tally << "\n";
  return strict && failed > 0 ? 3 : 0;
}

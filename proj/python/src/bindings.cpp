// Python bindings. Matrices cross the boundary as numpy arrays; coefficient
// sets are exchanged as dense (m, n) arrays whose positive entries are the
// stored coefficients.

#include "sparsemeter/experiments.hpp"
#include "sparsemeter/ingest.hpp"
#include "sparsemeter/log.hpp"
#include "sparsemeter/metrics.hpp"
#include "sparsemeter/solver.hpp"
#include "sparsemeter/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
namespace sm = sparsemeter;

namespace {

sm::ActivationSet to_set(const sm::RowMatrix& x, std::optional<std::vector<std::string>> labels = std::nullopt) {
  return sm::ActivationSet(x, std::move(labels));
}

sm::Dictionary to_dictionary(const sm::Matrix& phi) { return sm::Dictionary(phi); }

sm::CoefficientSet to_coefficients(const sm::Matrix& dense) {
  if ((dense.array() < 0.0).any()) throw sm::InvalidArgument("coefficients must be nonnegative");
  sm::SparseMatrix s = dense.sparseView(0.0, 0.0);
  s.prune([](sm::Index, sm::Index, double v) { return v > 0.0; });
  return sm::CoefficientSet(std::move(s));
}

sm::Matrix to_dense(const sm::CoefficientSet& alpha) { return sm::Matrix(alpha.matrix()); }

py::dict fit_to_dict(const sm::FitResult& r) {
  py::dict out;
  out["dictionary"] = r.dictionary.features();
  out["coefficients"] = to_dense(r.coefficients);
  out["final_lambda"] = r.final_lambda;
  out["objective_history"] = r.objective_history;
  out["lambda_history"] = r.lambda_history;
  out["residual_norm_sq"] = r.residual_norm_sq;
  return out;
}

py::object report_to_dict(const sm::MetricReport& report) {
  return py::module_::import("json").attr("loads")(report.to_json());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse dictionary learning and sparsity metrics";

  py::register_exception<sm::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<sm::FormatError>(m, "FormatError", PyExc_ValueError);

  m.def("set_log_level", [](const std::string& level) {
    if (level == "debug") sm::log::set_level(sm::log::Level::debug);
    else if (level == "info") sm::log::set_level(sm::log::Level::info);
    else if (level == "warn") sm::log::set_level(sm::log::Level::warn);
    else if (level == "quiet") sm::log::set_level(sm::log::Level::quiet);
    else throw sm::InvalidArgument("unknown log level '" + level + "'");
  });

  py::enum_<sm::StepRule>(m, "StepRule").value("plain", sm::StepRule::plain).value("lipschitz", sm::StepRule::lipschitz);

  py::class_<sm::SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &sm::SolverConfig::lambda)
      .def_readwrite("dict_factor", &sm::SolverConfig::dict_factor)
      .def_readwrite("phi_steps", &sm::SolverConfig::phi_steps)
      .def_readwrite("step_size", &sm::SolverConfig::step_size)
      .def_readwrite("step_rule", &sm::SolverConfig::step_rule)
      .def_readwrite("batch_size", &sm::SolverConfig::batch_size)
      .def_readwrite("max_alternations", &sm::SolverConfig::max_alternations)
      .def_readwrite("rel_tol", &sm::SolverConfig::rel_tol)
      .def_readwrite("adapt_lambda", &sm::SolverConfig::adapt_lambda)
      .def_readwrite("adapt_rounds", &sm::SolverConfig::adapt_rounds)
      .def_readwrite("seed", &sm::SolverConfig::seed)
      .def("validate", &sm::SolverConfig::validate)
      .def_static("experiment_default", &sm::ExperimentConfig::default_experiment_solver,
                  "Adaptive lambda with Lipschitz-scaled steps, as used by the experiment drivers.");

  m.def(
      "center",
      [](const sm::RowMatrix& x) {
        auto c = sm::center(to_set(x));
        return py::make_tuple(c.activations.data(), c.mean);
      },
      py::arg("x"));
  m.def("normalize_dictionary", [](const sm::Matrix& phi) { return sm::normalize_dictionary(phi).features(); });
  m.def(
      "objective",
      [](const sm::RowMatrix& x, const sm::Matrix& phi, const sm::Matrix& alpha, double lambda) {
        return sm::objective(to_set(x), to_dictionary(phi), to_coefficients(alpha), lambda);
      },
      py::arg("x"), py::arg("phi"), py::arg("alpha"), py::arg("lam"));

  m.def(
      "alpha_step",
      [](const sm::RowMatrix& x, const sm::Matrix& phi, double lambda) {
        return to_dense(sm::alpha_step(to_set(x), to_dictionary(phi), lambda));
      },
      py::arg("x"), py::arg("phi"), py::arg("lam"));
  m.def(
      "fit",
      [](const sm::RowMatrix& x, const sm::SolverConfig& cfg, std::optional<sm::Matrix> initial) {
        std::optional<sm::Dictionary> init;
        if (initial) init = to_dictionary(*initial);
        sm::FitResult r;
        {
          py::gil_scoped_release release;
          r = sm::fit(to_set(x), cfg, init);
        }
        return fit_to_dict(r);
      },
      py::arg("x"), py::arg("config"), py::arg("initial") = py::none());

  m.def(
      "compute_metrics",
      [](const sm::RowMatrix& x, const sm::Matrix& phi, const sm::Matrix& alpha, double lambda, double p) {
        return report_to_dict(sm::compute_metrics(to_set(x), to_dictionary(phi), to_coefficients(alpha), lambda, p));
      },
      py::arg("x"), py::arg("phi"), py::arg("alpha"), py::arg("lam"), py::arg("p") = 1.0);

  m.def(
      "gen_sparse_linear",
      [](sm::Index d, sm::Index n, double a, double sigma, sm::Index m_true, std::uint64_t seed) {
        const auto data = sm::gen_sparse_linear({d, m_true, a, sigma, n, seed});
        return py::make_tuple(data.activations.data(), data.truth.features.features(), to_dense(data.truth.coefficients));
      },
      py::arg("d"), py::arg("n"), py::arg("a"), py::arg("sigma") = 0.1, py::arg("m_true") = 0, py::arg("seed") = 0);
  m.def("gen_gaussian", [](sm::Index d, sm::Index n, std::uint64_t seed) { return sm::gen_gaussian(d, n, seed).data(); },
        py::arg("d"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "gen_heavy_tailed",
      [](sm::Index d, sm::Index n, std::uint64_t seed) { return sm::gen_heavy_tailed(d, n, seed).data(); },
      py::arg("d"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "gen_rademacher", [](sm::Index d, sm::Index n, std::uint64_t seed) { return sm::gen_rademacher(d, n, seed).data(); },
      py::arg("d"), py::arg("n"), py::arg("seed") = 0);
  m.def("normalize_for_loss", [](const sm::RowMatrix& x) { return sm::normalize_for_loss(to_set(x)).data(); });

  m.def(
      "read_activations",
      [](const std::filesystem::path& path) {
        const auto x = sm::read_activations(path);
        return py::make_tuple(x.data(), x.labels());
      },
      py::arg("path"));
  m.def(
      "write_activations",
      [](const std::filesystem::path& path, const sm::RowMatrix& x, std::optional<std::vector<std::string>> labels,
         const std::string& metadata_json) {
        sm::write_activations(path, to_set(x, std::move(labels)), nlohmann::json::parse(metadata_json));
      },
      py::arg("path"), py::arg("x"), py::arg("labels") = py::none(), py::arg("metadata_json") = "{}");
  m.def(
      "read_metadata_json", [](const std::filesystem::path& path) { return sm::read_metadata(path).dump(); },
      py::arg("path"));

  m.def(
      "run_experiment_json",
      [](const std::string& kind, const std::string& config_text) {
        sm::ExperimentConfig cfg;
        sm::apply_config_text(cfg, config_text);
        cfg.kind = sm::parse_experiment_kind(kind);
        std::string out;
        {
          py::gil_scoped_release release;
          out = sm::run_experiment(cfg).to_json().dump();
        }
        return out;
      },
      py::arg("kind"), py::arg("config_text") = "");
}

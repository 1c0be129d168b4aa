#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mrccc/bench.hpp"
#include "mrccc/cli.hpp"
#include "mrccc/csv.hpp"
#include "mrccc/errors.hpp"
#include "mrccc/pipeline.hpp"
#include "mrccc/simulator.hpp"

namespace py = pybind11;
using namespace mrccc;

PYBIND11_MODULE(_core, m) {
  m.doc() = "MR-CCC sampler, baselines, benchmark grid and screening pipeline";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def(py::init([](MatrixXd G, MatrixXd H, MatrixXd V, VectorXd x, VectorXd z, VectorXd y) {
             Dataset d{std::move(G), std::move(H), std::move(V), std::move(x), std::move(z), std::move(y)};
             d.validate();
             return d;
           }),
           py::arg("G"), py::arg("H"), py::arg("V"), py::arg("x"), py::arg("z"), py::arg("y"))
      .def_readwrite("G", &Dataset::G)
      .def_readwrite("H", &Dataset::H)
      .def_readwrite("V", &Dataset::V)
      .def_readwrite("x", &Dataset::x)
      .def_readwrite("z", &Dataset::z)
      .def_readwrite("y", &Dataset::y)
      .def_property_readonly("n", &Dataset::n)
      .def("validate", &Dataset::validate)
      .def("__eq__", &Dataset::operator==);

  py::class_<StructuralParams>(m, "StructuralParams")
      .def(py::init<>())
      .def_readwrite("pi_X", &StructuralParams::pi_X)
      .def_readwrite("pi_Z", &StructuralParams::pi_Z)
      .def_readwrite("alpha_X", &StructuralParams::alpha_X)
      .def_readwrite("alpha_Z", &StructuralParams::alpha_Z)
      .def_readwrite("alpha_Y", &StructuralParams::alpha_Y)
      .def_readwrite("lambda_X", &StructuralParams::lambda_X)
      .def_readwrite("lambda_Z", &StructuralParams::lambda_Z)
      .def_readwrite("lambda_Y", &StructuralParams::lambda_Y)
      .def_readwrite("beta_X", &StructuralParams::beta_X)
      .def_readwrite("beta_Z", &StructuralParams::beta_Z)
      .def_readwrite("beta_XZ", &StructuralParams::beta_XZ)
      .def_readwrite("sigma2_X", &StructuralParams::sigma2_X)
      .def_readwrite("sigma2_Z", &StructuralParams::sigma2_Z)
      .def_readwrite("sigma2_Y", &StructuralParams::sigma2_Y)
      .def_readwrite("gamma", &StructuralParams::gamma);

  py::enum_<Scenario>(m, "Scenario")
      .value("S1", Scenario::S1)
      .value("S2", Scenario::S2)
      .value("S3", Scenario::S3);

  py::enum_<Method>(m, "Method")
      .value("OLS", Method::OLS)
      .value("MVMR", Method::MVMR)
      .value("MRBMA", Method::MRBMA)
      .value("MRCCC", Method::MRCCC);

  m.def("fixed_params", [](Scenario s) { return fixed_params(scenario_spec(s)); });

  py::class_<SimulatedReplicate>(m, "SimulatedReplicate")
      .def_readonly("data", &SimulatedReplicate::data)
      .def_readonly("truth", &SimulatedReplicate::truth);

  m.def(
      "simulate",
      [](Scenario s, Eigen::Index n, std::uint64_t replicate, std::uint64_t seed) {
        SimConfig c;
        c.scenario = scenario_spec(s);
        c.n = n;
        c.replicate_index = replicate;
        c.master_seed = seed;
        c.benchmark_mode = false;
        return generate_dataset(c);
      },
      py::arg("scenario"), py::arg("n"), py::arg("replicate") = 0, py::arg("seed") = 0);
  m.def("simulate_from_params", &simulate_from_params, py::arg("params"), py::arg("n"),
        py::arg("stream") = 0);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_static("defaults", &Hyperparams::defaults)
      .def_readwrite("g_G", &Hyperparams::g_G)
      .def_readwrite("g_H", &Hyperparams::g_H)
      .def_readwrite("g_V", &Hyperparams::g_V)
      .def_readwrite("g_Z", &Hyperparams::g_Z)
      .def_readwrite("g_beta", &Hyperparams::g_beta)
      .def_readwrite("a_sigma", &Hyperparams::a_sigma)
      .def_readwrite("b_sigma", &Hyperparams::b_sigma)
      .def_readwrite("a_rho", &Hyperparams::a_rho)
      .def_readwrite("b_rho", &Hyperparams::b_rho)
      .def_readwrite("nu_1", &Hyperparams::nu_1)
      .def_readwrite("ridge_lambda", &Hyperparams::ridge_lambda);

  py::class_<McmcSettings>(m, "McmcSettings")
      .def(py::init<>())
      .def_static("benchmark", &McmcSettings::benchmark, py::arg("seed") = 0)
      .def_static("screening", &McmcSettings::screening, py::arg("seed") = 0)
      .def_readwrite("iterations", &McmcSettings::iterations)
      .def_readwrite("burn_in", &McmcSettings::burn_in)
      .def_readwrite("thin", &McmcSettings::thin)
      .def_readwrite("seed", &McmcSettings::seed)
      .def_readwrite("keep_draws", &McmcSettings::keep_draws);

  py::class_<PosteriorDraw>(m, "PosteriorDraw")
      .def_readonly("iteration", &PosteriorDraw::iteration)
      .def_readonly("beta_X", &PosteriorDraw::beta_X)
      .def_readonly("beta_XZ", &PosteriorDraw::beta_XZ)
      .def_readonly("beta_Z", &PosteriorDraw::beta_Z)
      .def_readonly("mu", &PosteriorDraw::mu)
      .def_readonly("sigma2_Y", &PosteriorDraw::sigma2_Y)
      .def_readonly("rho", &PosteriorDraw::rho)
      .def_readonly("gamma", &PosteriorDraw::gamma);

  py::class_<PosteriorSummary>(m, "PosteriorSummary")
      .def_readonly("pip", &PosteriorSummary::pip)
      .def_readonly("mean_beta_X", &PosteriorSummary::mean_beta_X)
      .def_readonly("mean_beta_XZ", &PosteriorSummary::mean_beta_XZ)
      .def_readonly("mean_beta_Z", &PosteriorSummary::mean_beta_Z)
      .def_readonly("n_kept", &PosteriorSummary::n_kept)
      .def_readonly("draws", &PosteriorSummary::draws);

  m.def("center_dataset", [](const Dataset& d) { return center_dataset(d).data; });
  m.def("run_chain", &run_chain, py::arg("data"), py::arg("hyper"), py::arg("mcmc"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<MethodResult>(m, "MethodResult")
      .def_readonly("method", &MethodResult::method)
      .def_readonly("score", &MethodResult::score)
      .def_readonly("decision", &MethodResult::decision)
      .def_readonly("beta_X_hat", &MethodResult::beta_X_hat)
      .def_readonly("beta_XZ_hat", &MethodResult::beta_XZ_hat)
      .def_readonly("extras", &MethodResult::extras);

  py::class_<MrBmaOptions>(m, "MrBmaOptions")
      .def(py::init<>())
      .def_readwrite("g", &MrBmaOptions::g)
      .def_readwrite("summary_covariates", &MrBmaOptions::summary_covariates)
      .def_readwrite("profile_variance", &MrBmaOptions::profile_variance);

  m.def("fit_ols", &fit_ols);
  m.def("fit_mvmr", &fit_mvmr);
  m.def("fit_mrbma", &fit_mrbma, py::arg("data"), py::arg("options") = MrBmaOptions{});
  m.def(
      "fit_mrccc",
      [](const Dataset& d, const McmcSettings& mcmc, std::optional<Hyperparams> h) {
        return fit_mrccc(d, h ? *h : Hyperparams::defaults(d.n()), mcmc);
      },
      py::arg("data"), py::arg("mcmc") = McmcSettings::benchmark(), py::arg("hyper") = py::none(),
      py::call_guard<py::gil_scoped_release>());

  py::class_<EffectSummary>(m, "EffectSummary")
      .def_readonly("beta_X_hat", &EffectSummary::beta_X_hat)
      .def_readonly("beta_Z_hat", &EffectSummary::beta_Z_hat)
      .def_readonly("beta_XZ_hat", &EffectSummary::beta_XZ_hat)
      .def_readonly("beta_X_std", &EffectSummary::beta_X_std)
      .def_readonly("beta_XZ_std", &EffectSummary::beta_XZ_std)
      .def_readonly("sd_x", &EffectSummary::sd_x)
      .def_readonly("sd_z", &EffectSummary::sd_z)
      .def_readonly("sd_y", &EffectSummary::sd_y);
  m.def("standardize_effects",
        py::overload_cast<double, double, double, double, double, double>(&standardize_effects),
        py::arg("beta_X"), py::arg("beta_Z"), py::arg("beta_XZ"), py::arg("sd_x"),
        py::arg("sd_z"), py::arg("sd_y"));
  m.def("sign_reversal_threshold", &sign_reversal_threshold);

  py::class_<BenchCell>(m, "BenchCell")
      .def_readonly("scenario", &BenchCell::scenario)
      .def_readonly("n", &BenchCell::n)
      .def_readonly("method", &BenchCell::method)
      .def_readonly("score_mean", &BenchCell::score_mean)
      .def_readonly("score_sd", &BenchCell::score_sd)
      .def_readonly("rejection_rate", &BenchCell::rejection_rate)
      .def_readonly("bias_beta_X", &BenchCell::bias_beta_X)
      .def_readonly("mad_beta_X", &BenchCell::mad_beta_X)
      .def_readonly("bias_beta_XZ", &BenchCell::bias_beta_XZ)
      .def_readonly("mad_beta_XZ", &BenchCell::mad_beta_XZ)
      .def_readonly("replicates", &BenchCell::replicates)
      .def_readonly("failures", &BenchCell::failures);
  m.def("summarize_cell", [](const std::vector<MethodResult>& r, const StructuralParams& truth) {
    return summarize_cell(r, truth);
  });
  m.def(
      "run_grid",
      [](std::vector<Scenario> scenarios, std::vector<Eigen::Index> ns, std::vector<Method> methods,
         int replicates, std::uint64_t seed, int jobs, const McmcSettings& mcmc) {
        GridOptions g;
        g.scenarios = std::move(scenarios);
        g.ns = std::move(ns);
        g.methods = std::move(methods);
        g.replicates = replicates;
        g.master_seed = seed;
        g.jobs = jobs;
        g.mcmc = mcmc;
        py::gil_scoped_release release;
        return run_grid(g);
      },
      py::arg("scenarios"), py::arg("ns"), py::arg("methods"), py::arg("replicates") = 20,
      py::arg("seed") = 0, py::arg("jobs") = 1, py::arg("mcmc") = McmcSettings::benchmark());

  m.def("library_size_mask", &library_size_mask);
  py::enum_<Association>(m, "Association")
      .value("Pearson", Association::Pearson)
      .value("Spearman", Association::Spearman);
  py::enum_<Representation>(m, "Representation")
      .value("PC1", Representation::PC1)
      .value("Mean", Representation::Mean);
  py::class_<PathwayActivity>(m, "PathwayActivity")
      .def_readonly("values", &PathwayActivity::values)
      .def_readonly("chosen", &PathwayActivity::chosen)
      .def_readonly("pc1", &PathwayActivity::pc1)
      .def_readonly("mean", &PathwayActivity::mean)
      .def_readonly("assoc_pc1", &PathwayActivity::assoc_pc1)
      .def_readonly("assoc_mean", &PathwayActivity::assoc_mean)
      .def_readonly("pc1_variance_share", &PathwayActivity::pc1_variance_share);
  m.def("pathway_activity", &pathway_activity, py::arg("pathway"), py::arg("ligand"),
        py::arg("association") = Association::Pearson);

  m.def("read_dataset_csv", [](const std::filesystem::path& p) { return read_dataset_csv(p); });
  m.def("write_dataset_csv", [](const std::filesystem::path& p, const Dataset& d) {
    write_dataset_csv(p, d);
  });

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli_dispatch(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      "Run a CLI command; returns (exit_code, stdout, stderr).");
}

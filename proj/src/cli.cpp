#include "mrccc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "mrccc/bench.hpp"
#include "mrccc/csv.hpp"
#include "mrccc/errors.hpp"
#include "mrccc/parallel.hpp"
#include "mrccc/pipeline.hpp"
#include "mrccc/simulator.hpp"

namespace mrccc {
namespace {

// Bad option values found after CLI11 has parsed the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void write_trace_csv(const std::string& path, const PosteriorSummary& post) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_csv_row(out, {"iteration", "beta_x", "beta_xz", "beta_z", "mu", "sigma2_y", "rho", "gamma"});
  for (const PosteriorDraw& d : post.draws) {
    write_csv_row(out, {std::to_string(d.iteration), format_double(d.beta_X),
                        format_double(d.beta_XZ), format_double(d.beta_Z), format_double(d.mu),
                        format_double(d.sigma2_Y), format_double(d.rho), std::to_string(d.gamma)});
  }
}

struct McmcArgs {
  int iterations = 20000;
  int burn_in = 2000;
  int thin = 5;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--iterations", iterations, "MCMC iterations")->capture_default_str();
    app->add_option("--burn-in", burn_in, "Discarded initial iterations")->capture_default_str();
    app->add_option("--thin", thin, "Keep every thin-th draw after burn-in")->capture_default_str();
  }
  McmcSettings settings() const {
    McmcSettings m;
    m.iterations = iterations;
    m.burn_in = burn_in;
    m.thin = thin;
    m.seed = seed;
    as_usage([&] {
      m.validate();
      return 0;
    });
    return m;
  }
};

}  // namespace

void write_method_result_csv(std::ostream& out, const MethodResult& r, Eigen::Index n) {
  std::vector<std::string> header{"method", "n", "score", "decision", "beta_x", "beta_xz"};
  std::vector<std::string> row{to_string(r.method), std::to_string(n), format_double(r.score),
                               r.decision ? "1" : "0", format_double(r.beta_X_hat),
                               r.beta_XZ_hat ? format_double(*r.beta_XZ_hat) : "NA"};
  for (const auto& [k, v] : r.extras) {
    header.push_back(k);
    row.push_back(format_double(v));
  }
  write_csv_row(out, header);
  write_csv_row(out, row);
}

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian Mendelian randomization for cell-cell communication", "mrccc"};
  app.require_subcommand(1, 1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw replicate datasets from a benchmark scenario");
  std::string sim_scenario;
  long sim_n = 500;
  int sim_reps = 1;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  sim->add_option("--scenario", sim_scenario, "S1, S2 or S3")->required();
  sim->add_option("--n", sim_n, "Donors per replicate")->capture_default_str();
  sim->add_option("--replicates", sim_reps, "Number of replicates")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Master seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one method to a dataset CSV");
  std::string fit_data, fit_method_name = "mrccc", fit_out, fit_trace;
  McmcArgs fit_mcmc;
  fit->add_option("--data", fit_data, "Dataset CSV")->required();
  fit->add_option("--method", fit_method_name, "ols, mvmr, mrbma or mrccc")->capture_default_str();
  fit_mcmc.add(fit);
  fit->add_option("--seed", fit_mcmc.seed, "Chain seed")->capture_default_str();
  fit->add_option("--out", fit_out, "Result CSV (default stdout)");
  fit->add_option("--trace", fit_trace, "Per-draw trace CSV (mrccc only)");

  // screen
  auto* scr = app.add_subcommand("screen", "Screen ligand-receptor-pathway triplets from a manifest");
  std::string scr_manifest, scr_out;
  int scr_jobs = default_jobs();
  scr->add_option("--manifest", scr_manifest, "JSON manifest")->required();
  scr->add_option("--out", scr_out, "Result CSV (default stdout)");
  scr->add_option("--jobs", scr_jobs, "Worker threads")->capture_default_str();

  // benchmark
  auto* ben = app.add_subcommand("benchmark", "Run the scenario x n x method simulation grid");
  std::uint64_t ben_seed = 0;
  std::vector<long> ben_ns{500, 1000, 10000, 30000};
  std::vector<std::string> ben_scen{"S1", "S2", "S3"};
  std::vector<std::string> ben_methods{"ols", "mvmr", "mrbma", "mrccc"};
  int ben_reps = 20;
  int ben_jobs = default_jobs();
  std::string ben_out;
  McmcArgs ben_mcmc;
  ben->add_option("--seed", ben_seed, "Master seed")->capture_default_str();
  ben->add_option("--n-list", ben_ns, "Comma-separated sample sizes")->delimiter(',')->capture_default_str();
  ben->add_option("--scenarios", ben_scen, "Comma-separated scenarios")->delimiter(',');
  ben->add_option("--methods", ben_methods, "Comma-separated methods")->delimiter(',');
  ben->add_option("--replicates", ben_reps, "Replicates per cell")->capture_default_str();
  ben_mcmc.add(ben);
  ben->add_option("--jobs", ben_jobs, "Worker threads")->capture_default_str();
  ben->add_option("--out", ben_out, "Result CSV (default stdout)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (const CLI::App* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      SimConfig cfg;
      cfg.scenario = as_usage([&] { return scenario_spec(parse_scenario(sim_scenario)); });
      cfg.n = sim_n;
      cfg.master_seed = sim_seed;
      cfg.benchmark_mode = false;
      as_usage([&] {
        cfg.validate();
        return 0;
      });
      if (sim_reps < 1) throw UsageError("--replicates must be >= 1");
      std::filesystem::create_directories(sim_out);
      for (int r = 0; r < sim_reps; ++r) {
        cfg.replicate_index = static_cast<std::uint64_t>(r);
        const SimulatedReplicate rep = generate_dataset(cfg);
        const std::string stem = to_string(cfg.scenario.id) + "_n" + std::to_string(sim_n) +
                                 "_rep" + std::to_string(r);
        const auto data_path = std::filesystem::path(sim_out) / (stem + ".csv");
        write_dataset_csv(data_path, rep.data);
        write_truth_csv(std::filesystem::path(sim_out) / (stem + "_truth.csv"), rep.truth);
        out << data_path.string() << '\n';
      }
    } else if (fit->parsed()) {
      const Method m = as_usage([&] { return parse_method(fit_method_name); });
      McmcSettings mcmc = fit_mcmc.settings();
      if (!fit_trace.empty() && m != Method::MRCCC) throw UsageError("--trace requires --method mrccc");
      const Dataset d = read_dataset_csv(fit_data);
      MethodResult r;
      if (m == Method::MRCCC) {
        mcmc.keep_draws = !fit_trace.empty();
        PosteriorSummary post;
        r = fit_mrccc(d, Hyperparams::defaults(d.n()), mcmc, &post);
        if (!fit_trace.empty()) write_trace_csv(fit_trace, post);
      } else {
        r = fit_method(m, d, mcmc);
      }
      Output o(fit_out, out);
      write_method_result_csv(o.get(), r, d.n());
    } else if (scr->parsed()) {
      const Manifest man = read_manifest(scr_manifest);
      const auto rows = screen_manifest(man, scr_jobs);
      Output o(scr_out, out);
      write_screen_csv(o.get(), rows);
    } else if (ben->parsed()) {
      GridOptions g;
      g.master_seed = ben_seed;
      g.replicates = ben_reps;
      g.jobs = ben_jobs;
      g.mcmc = ben_mcmc.settings();
      if (ben_reps < 1) throw UsageError("--replicates must be >= 1");
      g.scenarios.clear();
      for (const auto& s : ben_scen) g.scenarios.push_back(as_usage([&] { return parse_scenario(s); }));
      g.methods.clear();
      for (const auto& s : ben_methods) g.methods.push_back(as_usage([&] { return parse_method(s); }));
      g.ns.clear();
      for (long n : ben_ns) {
        if (n < 10) throw UsageError("--n-list entries must be >= 10");
        g.ns.push_back(n);
      }
      const auto cells = run_grid(g);
      Output o(ben_out, out);
      write_bench_csv(o.get(), cells);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error (" << e.step() << "): " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int cli_dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace mrccc

#include "mrccc/bench.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mrccc/csv.hpp"
#include "mrccc/errors.hpp"
#include "mrccc/parallel.hpp"
#include "mrccc/rng.hpp"

namespace mrccc {

BenchCell summarize_cell(std::span<const MethodResult> results,
                         const StructuralParams& truth) {
  if (results.empty()) throw ValidationError("summarize_cell: no results");
  const Method method = results.front().method;
  const bool has_xz = results.front().beta_XZ_hat.has_value();
  for (const MethodResult& r : results) {
    if (r.method != method) throw ValidationError("summarize_cell: mixed methods");
    if (r.beta_XZ_hat.has_value() != has_xz) {
      throw ValidationError("summarize_cell: inconsistent interaction estimates");
    }
  }
  const double R = static_cast<double>(results.size());
  BenchCell c;
  c.method = method;
  c.replicates = static_cast<int>(results.size());
  c.single_replicate = results.size() == 1;

  double sum_score = 0.0, rejections = 0.0;
  double bias_x = 0.0, mad_x = 0.0, bias_xz = 0.0, mad_xz = 0.0;
  for (const MethodResult& r : results) {
    sum_score += r.score;
    rejections += r.decision ? 1.0 : 0.0;
    const double ex = r.beta_X_hat - truth.beta_X;
    bias_x += ex;
    mad_x += std::abs(ex);
    if (has_xz) {
      const double exz = *r.beta_XZ_hat - truth.beta_XZ;
      bias_xz += exz;
      mad_xz += std::abs(exz);
    }
  }
  c.score_mean = sum_score / R;
  if (!c.single_replicate) {
    double ss = 0.0;
    for (const MethodResult& r : results) ss += (r.score - c.score_mean) * (r.score - c.score_mean);
    c.score_sd = std::sqrt(ss / (R - 1.0));
  }
  c.rejection_rate = rejections / R;
  c.bias_beta_X = bias_x / R;
  // |bias| <= MAD holds exactly in real arithmetic; guard against rounding.
  c.mad_beta_X = std::max(mad_x / R, std::abs(c.bias_beta_X));
  if (has_xz) {
    c.bias_beta_XZ = bias_xz / R;
    c.mad_beta_XZ = std::max(mad_xz / R, std::abs(*c.bias_beta_XZ));
  }
  return c;
}

std::uint64_t chain_seed(std::uint64_t master_seed, Scenario s, Eigen::Index n,
                         int replicate) {
  return derive_seed({master_seed, 0x4d52434343ULL, static_cast<std::uint64_t>(s),
                      static_cast<std::uint64_t>(n),
                      static_cast<std::uint64_t>(replicate)});
}

MethodResult fit_method(Method m, const Dataset& d, const McmcSettings& mcmc,
                        const MrBmaOptions& mrbma) {
  switch (m) {
    case Method::OLS: return fit_ols(d);
    case Method::MVMR: return fit_mvmr(d);
    case Method::MRBMA: return fit_mrbma(d, mrbma);
    case Method::MRCCC: return fit_mrccc(d, Hyperparams::defaults(d.n()), mcmc);
  }
  throw ValidationError("unknown method");
}

std::vector<BenchCell> run_grid(const GridOptions& opt) {
  if (opt.replicates < 1) throw ValidationError("run_grid: replicates must be >= 1");
  struct Task {
    Scenario scenario;
    Eigen::Index n;
    int replicate;
  };
  std::vector<Task> tasks;
  for (Scenario s : opt.scenarios)
    for (Eigen::Index n : opt.ns)
      for (int r = 0; r < opt.replicates; ++r) tasks.push_back({s, n, r});

  const std::size_t n_methods = opt.methods.size();
  // results[task * n_methods + method]; empty optional marks a failed fit.
  std::vector<std::optional<MethodResult>> results(tasks.size() * n_methods);

  parallel_for(tasks.size(), opt.jobs, [&](std::size_t t) {
    const Task& task = tasks[t];
    SimConfig cfg;
    cfg.scenario = scenario_spec(task.scenario);
    cfg.n = task.n;
    cfg.replicate_index = static_cast<std::uint64_t>(task.replicate);
    cfg.master_seed = opt.master_seed;
    cfg.benchmark_mode = false;
    const SimulatedReplicate rep = generate_dataset(cfg);
    McmcSettings mcmc = opt.mcmc;
    mcmc.seed = chain_seed(opt.master_seed, task.scenario, task.n, task.replicate);
    for (std::size_t m = 0; m < n_methods; ++m) {
      if (opt.on_fit) {
        opt.on_fit({task.scenario, task.n, task.replicate, opt.methods[m], rep.data});
      }
      try {
        results[t * n_methods + m] = fit_method(opt.methods[m], rep.data, mcmc, opt.mrbma);
      } catch (const std::exception&) {
        results[t * n_methods + m].reset();
      }
    }
  });

  std::vector<BenchCell> cells;
  std::size_t t0 = 0;
  for (Scenario s : opt.scenarios) {
    const StructuralParams truth = fixed_params(scenario_spec(s));
    for (Eigen::Index n : opt.ns) {
      for (std::size_t m = 0; m < n_methods; ++m) {
        std::vector<MethodResult> ok;
        int failures = 0;
        for (int r = 0; r < opt.replicates; ++r) {
          const auto& slot = results[(t0 + static_cast<std::size_t>(r)) * n_methods + m];
          if (slot) ok.push_back(*slot);
          else ++failures;
        }
        BenchCell cell;
        if (!ok.empty()) cell = summarize_cell(ok, truth);
        cell.method = opt.methods[m];
        cell.scenario = s;
        cell.n = n;
        cell.failures = failures;
        cells.push_back(cell);
      }
      t0 += static_cast<std::size_t>(opt.replicates);
    }
  }
  return cells;
}

void write_bench_csv(std::ostream& out, std::span<const BenchCell> cells) {
  write_csv_row(out, {"scenario", "n", "method", "score_mean", "score_sd",
                      "rejection_rate", "bias_bx", "mad_bx", "bias_bxz",
                      "mad_bxz", "replicates", "failures"});
  auto opt_num = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("NA");
  };
  for (const BenchCell& c : cells) {
    const bool empty = c.replicates == 0;
    auto num = [&](double v) { return empty ? std::string("NA") : format_double(v); };
    write_csv_row(out, {to_string(c.scenario), std::to_string(c.n), to_string(c.method),
                        num(c.score_mean), num(c.score_sd), num(c.rejection_rate),
                        num(c.bias_beta_X), num(c.mad_beta_X), opt_num(c.bias_beta_XZ),
                        opt_num(c.mad_beta_XZ), std::to_string(c.replicates),
                        std::to_string(c.failures)});
  }
}

}  // namespace mrccc

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrccc/baselines.hpp"
#include "mrccc/simulator.hpp"

namespace mrccc {

/// One (scenario, n, method) row of the benchmark tables.
struct BenchCell {
  Scenario scenario = Scenario::S1;
  Eigen::Index n = 0;
  Method method = Method::OLS;
  double score_mean = 0.0;
  double score_sd = 0.0;  // denominator R - 1; 0 for a single replicate
  bool single_replicate = false;
  double rejection_rate = 0.0;
  double bias_beta_X = 0.0;
  double mad_beta_X = 0.0;
  std::optional<double> bias_beta_XZ;  // empty when the method has no interaction
  std::optional<double> mad_beta_XZ;
  int replicates = 0;  // successful fits
  int failures = 0;
};

/// Aggregates replicate results of one method against the truth.
/// bias = mean(est - truth), MAD = mean |est - truth|. Throws on empty input
/// or mixed methods.
BenchCell summarize_cell(std::span<const MethodResult> results,
                         const StructuralParams& truth);

struct FitEvent {
  Scenario scenario;
  Eigen::Index n;
  int replicate;
  Method method;
  const Dataset& data;
};

struct GridOptions {
  std::vector<Scenario> scenarios = {Scenario::S1, Scenario::S2, Scenario::S3};
  std::vector<Eigen::Index> ns = {500, 1000, 10000, 30000};
  std::vector<Method> methods = {Method::OLS, Method::MVMR, Method::MRBMA,
                                 Method::MRCCC};
  int replicates = 20;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  /// Chain settings for MR-CCC; the seed field is replaced per replicate.
  McmcSettings mcmc = McmcSettings::benchmark();
  MrBmaOptions mrbma;
  /// Called before every fit, possibly from worker threads.
  std::function<void(const FitEvent&)> on_fit;
};

/// Seed of the MR-CCC chain for one grid replicate.
std::uint64_t chain_seed(std::uint64_t master_seed, Scenario s, Eigen::Index n,
                         int replicate);

/// Runs every method on the same simulated replicate for each (scenario, n,
/// replicate) and returns cells ordered scenario, n, method. Failed fits are
/// counted per cell instead of aborting the grid.
std::vector<BenchCell> run_grid(const GridOptions& opt);

MethodResult fit_method(Method m, const Dataset& d, const McmcSettings& mcmc,
                        const MrBmaOptions& mrbma = {});

void write_bench_csv(std::ostream& out, std::span<const BenchCell> cells);

}  // namespace mrccc

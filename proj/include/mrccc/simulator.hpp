#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrccc/model.hpp"

namespace mrccc {

enum class Scenario { S1, S2, S3 };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

/// S1: no communication. S2: main effect plus receptor modulation.
/// S3: main effect only.
struct ScenarioSpec {
  Scenario id = Scenario::S1;
  double beta_X = 0.0;
  double beta_XZ = 0.0;
  int gamma = 0;
};

ScenarioSpec scenario_spec(Scenario s);

inline constexpr int kBenchmarkInstruments = 5;
inline constexpr int kBenchmarkCovariates = 3;

/// Benchmark parameter set: five instruments per exposure at 0.5, three
/// covariates at 0.3, beta_Z = 0.5, confounding 0.7 on every equation and unit
/// error variances.
StructuralParams fixed_params(const ScenarioSpec& s);

struct SimConfig {
  ScenarioSpec scenario;
  Eigen::Index n = 500;
  std::uint64_t replicate_index = 0;
  std::uint64_t master_seed = 0;
  bool benchmark_mode = true;

  void validate() const;
};

struct SimulatedReplicate {
  Dataset data;
  StructuralParams truth;
  /// Unobserved confounder. Exposed only for oracle tests; estimators must
  /// never read it.
  VectorXd debug_confounder;
};

/// Draws one replicate. Each block (G, H, V, U, eps_X, eps_Z, eps_Y, in that
/// order) comes from its own generator seeded by (master_seed, scenario, n,
/// replicate_index, block) and is filled column by column, so output is
/// bit-reproducible and independent of the order replicates are produced in.
SimulatedReplicate generate_dataset(const SimConfig& c);

/// Ad-hoc generation with caller-supplied parameters. `stream` selects the
/// random stream the same way as the tuple in SimConfig.
SimulatedReplicate simulate_from_params(const StructuralParams& params,
                                        Eigen::Index n, std::uint64_t stream);

std::vector<SimulatedReplicate> generate_replicates(Scenario scenario,
                                                    Eigen::Index n, int count,
                                                    std::uint64_t master_seed);

}  // namespace mrccc

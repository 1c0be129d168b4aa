#include "mrccc/simulator.hpp"

#include "mrccc/errors.hpp"
#include "mrccc/rng.hpp"

namespace mrccc {
namespace {

enum Block : std::uint64_t { kG = 0, kH, kV, kU, kEpsX, kEpsZ, kEpsY };

MatrixXd standard_normal_block(std::uint64_t stream, Block block,
                               Eigen::Index rows, Eigen::Index cols) {
  Rng rng(derive_seed({stream, static_cast<std::uint64_t>(block)}));
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

VectorXd standard_normal_vector(std::uint64_t stream, Block block,
                                Eigen::Index n) {
  return standard_normal_block(stream, block, n, 1).col(0);
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::S3: return "S3";
  }
  return "?";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "S1" || s == "s1" || s == "1") return Scenario::S1;
  if (s == "S2" || s == "s2" || s == "2") return Scenario::S2;
  if (s == "S3" || s == "s3" || s == "3") return Scenario::S3;
  throw ValidationError("unknown scenario '" + s + "' (expected S1, S2 or S3)");
}

ScenarioSpec scenario_spec(Scenario s) {
  switch (s) {
    case Scenario::S1: return {s, 0.0, 0.0, 0};
    case Scenario::S2: return {s, 0.3, 0.3, 1};
    case Scenario::S3: return {s, 0.3, 0.0, 1};
  }
  throw ValidationError("invalid scenario");
}

StructuralParams fixed_params(const ScenarioSpec& s) {
  StructuralParams p;
  p.pi_X = VectorXd::Constant(kBenchmarkInstruments, 0.5);
  p.pi_Z = VectorXd::Constant(kBenchmarkInstruments, 0.5);
  p.alpha_X = VectorXd::Constant(kBenchmarkCovariates, 0.3);
  p.alpha_Z = VectorXd::Constant(kBenchmarkCovariates, 0.3);
  p.alpha_Y = VectorXd::Constant(kBenchmarkCovariates, 0.3);
  p.lambda_X = p.lambda_Z = p.lambda_Y = 0.7;
  p.beta_Z = 0.5;
  p.beta_X = s.beta_X;
  p.beta_XZ = s.beta_XZ;
  p.sigma2_X = p.sigma2_Z = p.sigma2_Y = 1.0;
  p.gamma = communication_indicator(s.beta_X, s.beta_XZ);
  return p;
}

void SimConfig::validate() const {
  if (benchmark_mode) {
    if (n != 500 && n != 1000 && n != 10000 && n != 30000) {
      throw ValidationError("benchmark mode requires n in {500, 1000, 10000, 30000}");
    }
  } else if (n < 10) {
    throw ValidationError("ad-hoc simulation requires n >= 10");
  }
}

SimulatedReplicate simulate_from_params(const StructuralParams& params,
                                        Eigen::Index n, std::uint64_t stream) {
  params.validate();
  const Eigen::Index pG = params.pi_X.size();
  const Eigen::Index pH = params.pi_Z.size();
  const Eigen::Index pV = params.alpha_X.size();

  SimulatedReplicate r;
  r.truth = params;
  Dataset& d = r.data;
  d.G = standard_normal_block(stream, kG, n, pG);
  d.H = standard_normal_block(stream, kH, n, pH);
  d.V = standard_normal_block(stream, kV, n, pV);
  r.debug_confounder = standard_normal_vector(stream, kU, n);
  const VectorXd eps_x = standard_normal_vector(stream, kEpsX, n);
  const VectorXd eps_z = standard_normal_vector(stream, kEpsZ, n);
  const VectorXd eps_y = standard_normal_vector(stream, kEpsY, n);
  const VectorXd& u = r.debug_confounder;

  d.x = d.G * params.pi_X + d.V * params.alpha_X + params.lambda_X * u +
        std::sqrt(params.sigma2_X) * eps_x;
  d.z = d.H * params.pi_Z + d.V * params.alpha_Z + params.lambda_Z * u +
        std::sqrt(params.sigma2_Z) * eps_z;
  d.y = params.beta_X * d.x + params.beta_Z * d.z +
        params.beta_XZ * d.x.cwiseProduct(d.z) + d.V * params.alpha_Y +
        params.lambda_Y * u + std::sqrt(params.sigma2_Y) * eps_y;
  return r;
}

SimulatedReplicate generate_dataset(const SimConfig& c) {
  c.validate();
  const std::uint64_t stream =
      derive_seed({c.master_seed, static_cast<std::uint64_t>(c.scenario.id),
                   static_cast<std::uint64_t>(c.n), c.replicate_index});
  StructuralParams params = fixed_params(c.scenario);
  return simulate_from_params(params, c.n, stream);
}

std::vector<SimulatedReplicate> generate_replicates(Scenario scenario,
                                                    Eigen::Index n, int count,
                                                    std::uint64_t master_seed) {
  if (count < 1) throw ValidationError("replicate count must be >= 1");
  std::vector<SimulatedReplicate> out;
  out.reserve(static_cast<std::size_t>(count));
  SimConfig c;
  c.scenario = scenario_spec(scenario);
  c.n = n;
  c.master_seed = master_seed;
  c.benchmark_mode = false;
  for (int r = 0; r < count; ++r) {
    c.replicate_index = static_cast<std::uint64_t>(r);
    out.push_back(generate_dataset(c));
  }
  return out;
}

}  // namespace mrccc

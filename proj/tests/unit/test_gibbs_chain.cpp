#include <doctest.h>

#include <random>
#include <string>

#include "helpers.hpp"
#include "mrccc/baselines.hpp"
#include "mrccc/errors.hpp"
#include "mrccc/gibbs.hpp"
#include "mrccc/simulator.hpp"

using namespace mrccc;

namespace {

Dataset sim(Scenario s, Eigen::Index n, std::uint64_t rep, std::uint64_t seed = 99) {
  SimConfig c;
  c.scenario = scenario_spec(s);
  c.n = n;
  c.replicate_index = rep;
  c.master_seed = seed;
  return center_dataset(generate_dataset(c).data).data;
}

}  // namespace

TEST_SUITE("gibbs_chain") {

TEST_CASE("same seed twice gives an identical summary") {
  const Dataset d = sim(Scenario::S2, 500, 0);
  McmcSettings m{600, 100, 5, 42, true};
  const Hyperparams h = Hyperparams::defaults(d.n());
  const PosteriorSummary a = run_chain(d, h, m);
  const PosteriorSummary b = run_chain(d, h, m);
  CHECK(a.pip == b.pip);
  CHECK(a.mean_beta_X == b.mean_beta_X);
  CHECK(a.mean_beta_XZ == b.mean_beta_XZ);
  CHECK(a.mean_beta_Z == b.mean_beta_Z);
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t i = 0; i < a.draws.size(); ++i) CHECK(a.draws[i].beta_X == b.draws[i].beta_X);
  m.seed = 43;
  CHECK(run_chain(d, h, m).mean_beta_X != a.mean_beta_X);
}

TEST_CASE("thinning, burn-in and PIP bookkeeping") {
  const Dataset d = sim(Scenario::S1, 500, 1);
  McmcSettings m{1000, 200, 7, 1, true};
  const PosteriorSummary p = run_chain(d, Hyperparams::defaults(d.n()), m);
  // kept iterations: it >= 200 with (it - 199) % 7 == 0
  int expected = 0;
  for (int it = 200; it < 1000; ++it) expected += (it - 199) % 7 == 0;
  CHECK(p.n_kept == expected);
  REQUIRE(static_cast<int>(p.draws.size()) == expected);
  CHECK(p.draws.front().iteration == 206);
  int ones = 0;
  double bx = 0;
  for (const auto& dr : p.draws) {
    ones += dr.gamma;
    bx += dr.beta_X;
  }
  CHECK(p.pip == doctest::Approx(double(ones) / expected).epsilon(1e-15));
  CHECK(p.mean_beta_X == doctest::Approx(bx / expected).epsilon(1e-12));
  CHECK(p.pip >= 0.0);
  CHECK(p.pip <= 1.0);
  for (const auto& dr : p.draws) {
    CHECK(dr.rho > 0.0);
    CHECK(dr.rho < 1.0);
    CHECK(dr.sigma2_Y > 0.0);
  }
}

TEST_CASE("S2 at n = 1000 is detected with PIP >= 0.99") {
  const Dataset d = sim(Scenario::S2, 1000, 0);
  const PosteriorSummary p =
      run_chain(d, Hyperparams::defaults(d.n()), McmcSettings::benchmark(5));
  CHECK(p.pip >= 0.99);
  CHECK(std::abs(p.mean_beta_X - 0.3) < 0.15);
  CHECK(std::abs(p.mean_beta_XZ - 0.3) < 0.15);
}

TEST_CASE("S1 at n = 1000 stays below the decision threshold") {
  const Dataset d = sim(Scenario::S1, 1000, 0);
  const PosteriorSummary p =
      run_chain(d, Hyperparams::defaults(d.n()), McmcSettings::benchmark(5));
  CHECK(p.pip < 0.5);
}

TEST_CASE("covariate-free data run") {
  std::mt19937_64 g(4);
  Dataset d = testutil::random_dataset(80, 2, 2, 0, g);
  d = center_dataset(d).data;
  const PosteriorSummary p = run_chain(d, Hyperparams::defaults(80), {300, 50, 1, 1, false});
  CHECK(p.n_kept == 250);
}

TEST_CASE("numerical failure carries step label and iteration") {
  std::mt19937_64 g(6);
  Dataset d = testutil::random_dataset(30, 2, 2, 1, g);
  d.x *= 1e160;
  d = center_dataset(d).data;
  try {
    run_chain(d, Hyperparams::defaults(30), {100, 10, 1, 1, false});
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(e.step().rfind("step", 0) == 0);
    CHECK(what.find("iteration 0") != std::string::npos);
  }
}

TEST_CASE("invalid inputs are rejected before sampling") {
  std::mt19937_64 g(1);
  Dataset d = testutil::random_dataset(10, 1, 1, 0, g);
  d.G = MatrixXd(10, 0);
  CHECK_THROWS_AS(run_chain(d, Hyperparams::defaults(10), {10, 1, 1, 0, false}), ValidationError);
}

}  // TEST_SUITE

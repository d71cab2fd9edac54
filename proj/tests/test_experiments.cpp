#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stlod/experiments.hpp"

using namespace stlod;

namespace {

ExperimentConfig desk() {
  ExperimentConfig c;
  c.n_coarse = 2;
  c.n_fine = 4;
  c.t_final = 0.75;
  c.coarse_steps = 3;
  c.fine_per_coarse = 4;
  c.seed = 42;
  c.eps_x = 0.25;
  c.eps_t = 0.125;
  c.periodic = false;
  c.k = 1;
  c.ell = 2;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// minimal RFC-4180-style shape check: a header plus uniform comma counts
void check_csv(const std::string& text, int columns) {
  std::stringstream ss(text);
  std::string line;
  int rows = 0;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    CHECK(std::count(line.begin(), line.end(), ',') == columns - 1);
    ++rows;
  }
  CHECK(rows >= 2);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("corrector command is deterministic and quick on the tiny instance") {
  const auto start = std::chrono::steady_clock::now();
  experiments::run_correctors(desk(), "exp_correctors_a.bin");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 10.0);

  experiments::run_correctors(desk(), "exp_correctors_b.bin");
  CHECK(slurp("exp_correctors_a.bin") == slurp("exp_correctors_b.bin"));

  // the cache feeds the solve command
  experiments::run_solve(desk(), "exp_correctors_a.bin", "exp_solve.csv");
  check_csv(slurp("exp_solve.csv"), 3);

  // a cache built under a different coefficient is refused
  ExperimentConfig other = desk();
  other.seed = 43;
  CHECK_THROWS_AS(experiments::run_solve(other, "exp_correctors_a.bin", "exp_solve.csv"),
                  io_error);
  std::remove("exp_correctors_a.bin");
  std::remove("exp_correctors_b.bin");
  std::remove("exp_solve.csv");
}

TEST_CASE("decay errors decrease monotonically and end at the oracle match") {
  ExperimentConfig c = desk();
  c.n_fine = 5;
  c.decay_k_max = 3;
  c.decay_ell_max = 3;
  const auto result = experiments::run_decay(c, "exp_decay.csv");

  REQUIRE(result.spatial.size() >= 2);
  for (size_t i = 1; i < result.spatial.size(); ++i)
    CHECK(result.spatial[i].rel_error <= result.spatial[i - 1].rel_error * (1 + 1e-12));
  CHECK(result.spatial.back().rel_error <= 1e-8);

  REQUIRE(result.temporal.size() >= 2);
  for (size_t i = 1; i < result.temporal.size(); ++i)
    CHECK(result.temporal[i].rel_error <= result.temporal[i - 1].rel_error * (1 + 1e-12));

  check_csv(slurp("exp_decay.csv"), 4);
  std::remove("exp_decay.csv");
}

TEST_CASE("convergence footer carries the slopes") {
  ExperimentConfig c = desk();
  c.n_fine = 5;
  c.t_final = 1.0;
  c.coarse_steps = 4;
  c.fine_per_coarse = 8;
  c.eps_x = 0.125;
  c.eps_t = 0.125;
  c.periodic = true;
  c.ell = 3;
  c.k = -1;
  c.h_exponents = {1, 2, 3};
  const auto result = experiments::run_convergence(c, "exp_convergence.csv");
  CHECK(result.rows.size() == 3);
  CHECK(result.slope_vtr > 0.0);

  const std::string text = slurp("exp_convergence.csv");
  CHECK(text.find("slope,") != std::string::npos);
  check_csv(text, 3);
  std::remove("exp_convergence.csv");
}

TEST_CASE("multirhs histogram counts every source and reuses the correctors") {
  ExperimentConfig c = desk();
  c.rhs_count = 8;
  c.bins = 4;
  const auto result = experiments::run_multirhs(c, "", "exp_multirhs.csv");
  CHECK(result.errors.size() == 8);
  CHECK(result.blocks_computed_during_online == 0);
  CHECK(result.fine_solves_during_online == 0);

  const std::string text = slurp("exp_multirhs.csv");
  check_csv(text, 2);
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);  // header
  int total = 0;
  while (std::getline(ss, line)) {
    const auto comma = line.find(',');
    total += std::stoi(line.substr(comma + 1));
  }
  CHECK(total == 8);
  std::remove("exp_multirhs.csv");
}

TEST_CASE("estimate reports finite nonnegative indicators with a maxima footer") {
  ExperimentConfig c = desk();
  c.n_fine = 5;
  c.k = 3;
  const auto result = experiments::run_estimate(c, "", "exp_estimate.csv");
  REQUIRE(!result.rows.empty());
  for (const auto& row : result.rows) {
    CHECK(std::isfinite(row.delta));
    CHECK(std::isfinite(row.theta));
    CHECK(row.delta >= 0.0);
    CHECK(row.theta >= 0.0);
    CHECK(row.delta <= result.delta_max);
    CHECK(row.theta <= result.theta_max);
  }

  // the zeroed-corrector diagnostic drives every indicator to zero
  ExperimentConfig zeroed = c;
  zeroed.zero_corrector = true;
  const auto zero_result = experiments::run_estimate(zeroed, "", "exp_estimate_zero.csv");
  CHECK(zero_result.delta_max == 0.0);
  CHECK(zero_result.theta_max == 0.0);

  check_csv(slurp("exp_estimate.csv"), 4);
  std::remove("exp_estimate.csv");
  std::remove("exp_estimate_zero.csv");
}

TEST_CASE("estimate requires a wide enough patch radius") {
  ExperimentConfig c = desk();  // k = 1
  CHECK_THROWS_AS(experiments::run_estimate(c, "", "exp_estimate_bad.csv"), invalid_argument);
}

}  // TEST_SUITE

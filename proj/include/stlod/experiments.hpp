#pragma once

#include <string>
#include <vector>

#include "stlod/config.hpp"
#include "stlod/solver.hpp"

namespace stlod::experiments {

// Mesh pair, time grid, coefficient field, and interpolation built from one
// configuration. Every command is a pure function of the configuration (and
// caches), so identical inputs give identical output files.
struct Workspace {
  SpatialMeshPair pair;
  TemporalGrid grid;
  Coefficient coeff;
  InterpolationOperator interp;
};

Workspace make_workspace(const ExperimentConfig& config);

void run_correctors(const ExperimentConfig& config, const std::string& out_path);

// Coarse solution for f == 1 written per (interval, node); uses the cache
// when a path is given, otherwise computes the correctors in memory.
void run_solve(const ExperimentConfig& config, const std::string& cache_path,
               const std::string& out_csv);

struct DecayRow {
  int param = 0;
  double rel_error = 0.0;
  double indicator = 0.0;
  bool has_indicator = false;
};

struct DecayResult {
  std::vector<DecayRow> spatial;   // localization error vs k, with delta
  std::vector<DecayRow> temporal;  // localization error vs ell, with theta
};

DecayResult run_decay(const ExperimentConfig& config, const std::string& out_csv);

struct ConvergenceRow {
  int exponent = 0;  // H = 2^-exponent
  double rel_vtr = 0.0;
  double rel_l2h1 = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double slope_vtr = 0.0;   // least squares in log2-log2
  double slope_l2h1 = 0.0;
};

ConvergenceResult run_convergence(const ExperimentConfig& config, const std::string& out_csv);

struct MultiRhsResult {
  std::vector<double> errors;  // one relative error per right-hand side
  uint64_t blocks_computed_during_online = 0;
  uint64_t fine_solves_during_online = 0;
};

MultiRhsResult run_multirhs(const ExperimentConfig& config, const std::string& cache_path,
                            const std::string& out_csv);

struct EstimateRow {
  int element = 0;
  int interval = 0;
  double delta = 0.0;
  double theta = 0.0;
};

struct EstimateResult {
  std::vector<EstimateRow> rows;
  double delta_max = 0.0;
  double theta_max = 0.0;
};

EstimateResult run_estimate(const ExperimentConfig& config, const std::string& cache_path,
                            const std::string& out_csv);

}  // namespace stlod::experiments

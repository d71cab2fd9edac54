#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stlod/common.hpp"

namespace stlod {

// Flat key = value experiment description, one experiment per file, '#'
// comments. Parsing and serialization round-trip losslessly.
struct ExperimentConfig {
  int n_coarse = 2;          // coarse mesh exponent (H = 2^-n_coarse)
  int n_fine = 4;            // fine mesh exponent
  double t_final = 0.75;
  int coarse_steps = 3;      // N_T
  int fine_per_coarse = 4;   // N_t

  uint64_t seed = 1;
  double eps_x = 0.25;
  double eps_t = 0.125;
  double coeff_low = 0.01;
  double coeff_high = 0.1;
  bool periodic = false;

  int k = -1;                // -1 means "auto": k = n_coarse
  int ell = 2;
  int workers = 1;
  bool reuse = true;         // reuse time-shifted correctors when periodic
  bool zero_corrector = false;  // diagnostics

  int rhs_count = 50;
  uint64_t rhs_seed = 7;
  int bins = 20;
  std::string norm = "vtr";  // vtr | l2h1

  int decay_k_max = 5;
  int decay_ell_max = 6;
  std::vector<int> h_exponents = {2, 3};  // convergence sweep

  int resolved_k() const { return k < 0 ? n_coarse : k; }
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

}  // namespace stlod

#include "stlod/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace stlod {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw invalid_argument("config: boolean expected for '" + key + "', got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw invalid_argument("config: integer list expected for '" + key + "'");
    }
  }
  if (out.empty()) throw invalid_argument("config: empty list for '" + key + "'");
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_argument("config: line " + std::to_string(lineno) + " is not 'key = value'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto geti = [&](const char* key, int& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      out = std::stoi(it->second);
    } catch (const std::exception&) {
      throw invalid_argument(std::string("config: integer expected for '") + key + "'");
    }
    kv.erase(it);
  };
  auto getd = [&](const char* key, double& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      out = std::stod(it->second);
    } catch (const std::exception&) {
      throw invalid_argument(std::string("config: number expected for '") + key + "'");
    }
    kv.erase(it);
  };
  auto getu = [&](const char* key, uint64_t& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      out = std::stoull(it->second);
    } catch (const std::exception&) {
      throw invalid_argument(std::string("config: integer expected for '") + key + "'");
    }
    kv.erase(it);
  };
  auto getb = [&](const char* key, bool& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    out = parse_bool(it->second, key);
    kv.erase(it);
  };

  geti("n_coarse", c.n_coarse);
  geti("n_fine", c.n_fine);
  getd("t_final", c.t_final);
  geti("coarse_steps", c.coarse_steps);
  geti("fine_per_coarse", c.fine_per_coarse);
  getu("seed", c.seed);
  getd("eps_x", c.eps_x);
  getd("eps_t", c.eps_t);
  getd("coeff_low", c.coeff_low);
  getd("coeff_high", c.coeff_high);
  getb("periodic", c.periodic);

  if (auto it = kv.find("k"); it != kv.end()) {
    if (it->second == "auto") {
      c.k = -1;
    } else {
      try {
        c.k = std::stoi(it->second);
      } catch (const std::exception&) {
        throw invalid_argument("config: 'k' must be an integer or 'auto'");
      }
    }
    kv.erase(it);
  }
  geti("ell", c.ell);
  geti("workers", c.workers);
  getb("reuse", c.reuse);
  getb("zero_corrector", c.zero_corrector);
  geti("rhs_count", c.rhs_count);
  getu("rhs_seed", c.rhs_seed);
  geti("bins", c.bins);
  if (auto it = kv.find("norm"); it != kv.end()) {
    if (it->second != "vtr" && it->second != "l2h1")
      throw invalid_argument("config: 'norm' must be vtr or l2h1");
    c.norm = it->second;
    kv.erase(it);
  }
  geti("decay_k_max", c.decay_k_max);
  geti("decay_ell_max", c.decay_ell_max);
  if (auto it = kv.find("h_exponents"); it != kv.end()) {
    c.h_exponents = parse_int_list(it->second, "h_exponents");
    kv.erase(it);
  }

  if (!kv.empty()) throw invalid_argument("config: unknown key '" + kv.begin()->first + "'");

  if (c.n_coarse < 1 || c.n_fine <= c.n_coarse)
    throw invalid_argument("config: need n_fine > n_coarse >= 1");
  if (c.coarse_steps < 1 || c.fine_per_coarse < 1 || c.t_final <= 0.0)
    throw invalid_argument("config: invalid temporal layout");
  if (!(0.0 < c.coeff_low && c.coeff_low < c.coeff_high))
    throw invalid_argument("config: need 0 < coeff_low < coeff_high");
  if (c.ell < 1) throw invalid_argument("config: ell must be >= 1");
  if (c.workers < 1) throw invalid_argument("config: workers must be >= 1");
  if (c.rhs_count < 1 || c.bins < 1)
    throw invalid_argument("config: rhs_count and bins must be >= 1");

  // divisibility constraints are re-validated here so bad configs fail fast
  const double fine_spacing = 1.0 / (1 << c.n_fine);
  const double tau = c.t_final / c.coarse_steps / c.fine_per_coarse;
  auto check_ratio = [](double num, double den, const char* what) {
    const double r = num / den;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, std::abs(r)) || r < 1.0 - 1e-9)
      throw invalid_argument(std::string("config: ") + what +
                             " must be a positive integer, got " + fmt_double(r));
  };
  check_ratio(1.0, c.eps_x, "1/eps_x");
  check_ratio(c.eps_x, fine_spacing, "eps_x / fine spacing");
  check_ratio(c.eps_t, tau, "eps_t / fine time step");

  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  auto add = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  add("n_coarse", std::to_string(c.n_coarse));
  add("n_fine", std::to_string(c.n_fine));
  add("t_final", fmt_double(c.t_final));
  add("coarse_steps", std::to_string(c.coarse_steps));
  add("fine_per_coarse", std::to_string(c.fine_per_coarse));
  add("seed", std::to_string(c.seed));
  add("eps_x", fmt_double(c.eps_x));
  add("eps_t", fmt_double(c.eps_t));
  add("coeff_low", fmt_double(c.coeff_low));
  add("coeff_high", fmt_double(c.coeff_high));
  add("periodic", c.periodic ? "1" : "0");
  add("k", c.k < 0 ? "auto" : std::to_string(c.k));
  add("ell", std::to_string(c.ell));
  add("workers", std::to_string(c.workers));
  add("reuse", c.reuse ? "1" : "0");
  add("zero_corrector", c.zero_corrector ? "1" : "0");
  add("rhs_count", std::to_string(c.rhs_count));
  add("rhs_seed", std::to_string(c.rhs_seed));
  add("bins", std::to_string(c.bins));
  add("norm", c.norm);
  add("decay_k_max", std::to_string(c.decay_k_max));
  add("decay_ell_max", std::to_string(c.decay_ell_max));
  std::string hs;
  for (size_t i = 0; i < c.h_exponents.size(); ++i)
    hs += (i ? "," : "") + std::to_string(c.h_exponents[i]);
  add("h_exponents", hs);
  return out;
}

}  // namespace stlod

#include "stlod/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace stlod {

namespace {

constexpr char kMagic[9] = {'S', 'T', 'L', 'O', 'D', 'C', 'O', 'E', 'F'};
constexpr uint32_t kVersion = 1;

int checked_ratio(double num, double den, const char* what) {
  const double r = num / den;
  const double rounded = std::round(r);
  if (rounded < 1.0 || std::abs(r - rounded) > 1e-9 * std::max(1.0, rounded)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s must be a positive integer, got %.17g", what, r);
    throw invalid_argument(buf);
  }
  return static_cast<int>(rounded);
}

Coefficient make_layout(double eps_x, double eps_t, bool periodic, double period) {
  if (eps_x <= 0.0 || eps_t <= 0.0)
    throw invalid_argument("coefficient: cell sizes must be positive");
  if (period <= 0.0)
    throw invalid_argument("coefficient: temporal extent must be positive");

  Coefficient c;
  c.eps_x = eps_x;
  c.eps_t = eps_t;
  c.time_periodic = periodic;
  c.period = period;
  c.nx = checked_ratio(1.0, eps_x, "1/eps_x");
  c.ny = c.nx;
  // the last temporal slab may be partial when eps_t does not divide the extent
  c.nt = std::max(1, static_cast<int>(std::ceil(period / eps_t - 1e-12)));
  return c;
}

}  // namespace

int Coefficient::slab_index(double t) const {
  double s = t;
  if (time_periodic) {
    s = std::fmod(s, period);
    if (s < 0.0) s += period;
  }
  int idx = static_cast<int>(std::floor(s / eps_t));
  return std::clamp(idx, 0, nt - 1);
}

uint64_t Coefficient::fingerprint() const {
  Fnv1a f;
  f.add_u64(seed);
  f.add_f64(eps_x);
  f.add_f64(eps_t);
  f.add_u64(time_periodic ? 1 : 0);
  f.add_f64(period);
  f.add_i64(nx);
  f.add_i64(ny);
  f.add_i64(nt);
  f.add_bytes(values.data(), values.size() * sizeof(double));
  return f.h;
}

Coefficient generate_random_coefficient(uint64_t seed, double eps_x, double eps_t,
                                        double low, double high, bool periodic,
                                        double period) {
  if (!(0.0 < low && low < high))
    throw invalid_argument("generate_random_coefficient: need 0 < low < high");

  Coefficient c = make_layout(eps_x, eps_t, periodic, period);
  c.seed = seed;
  c.values.resize(static_cast<size_t>(c.nx) * c.ny * c.nt);
  SplitMix64 rng(seed);
  for (int cx = 0; cx < c.nx; ++cx)
    for (int cy = 0; cy < c.ny; ++cy)
      for (int ct = 0; ct < c.nt; ++ct)
        c.values[(static_cast<size_t>(cx) * c.ny + cy) * c.nt + ct] = rng.uniform(low, high);

  auto [mn, mx] = std::minmax_element(c.values.begin(), c.values.end());
  c.alpha = *mn;
  c.beta = *mx;
  return c;
}

Coefficient constant_coefficient(double value, double eps_x, double eps_t,
                                 bool periodic, double period) {
  if (value <= 0.0) throw invalid_argument("constant_coefficient: value must be positive");
  Coefficient c = make_layout(eps_x, eps_t, periodic, period);
  c.values.assign(static_cast<size_t>(c.nx) * c.ny * c.nt, value);
  c.alpha = c.beta = value;
  return c;
}

double value_on(const Coefficient& coeff, std::array<double, 2> point, double time) {
  if (point[0] < 0.0 || point[0] > 1.0 || point[1] < 0.0 || point[1] > 1.0)
    throw invalid_argument("value_on: point outside the unit square");
  if (time < 0.0 || (!coeff.time_periodic && time > coeff.period * (1.0 + 1e-12)))
    throw invalid_argument("value_on: time outside the coefficient extent");

  const int cx = std::clamp(static_cast<int>(std::floor(point[0] * coeff.nx)), 0, coeff.nx - 1);
  const int cy = std::clamp(static_cast<int>(std::floor(point[1] * coeff.ny)), 0, coeff.ny - 1);
  return coeff.cell(cx, cy, coeff.slab_index(time));
}

std::pair<double, double> coefficient_bounds(const Coefficient& coeff) {
  return {coeff.alpha, coeff.beta};
}

void validate_resolution(const Coefficient& coeff, const SpatialMesh& fine,
                         const TemporalGrid& grid) {
  checked_ratio(coeff.eps_x, fine.spacing, "eps_x / fine spacing");
  checked_ratio(coeff.eps_t, grid.fine_step, "eps_t / fine time step");
  if (!coeff.time_periodic && coeff.period < grid.t_final * (1.0 - 1e-12))
    throw invalid_argument("coefficient extent shorter than the final time");
}

void save_coefficient(const std::string& path, const Coefficient& coeff) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);

  auto w = [&](const void* p, size_t n) { out.write(static_cast<const char*>(p), n); };
  w(kMagic, sizeof kMagic);
  w(&kVersion, sizeof kVersion);
  w(&coeff.seed, sizeof coeff.seed);
  w(&coeff.eps_x, sizeof coeff.eps_x);
  w(&coeff.eps_t, sizeof coeff.eps_t);
  const uint8_t periodic = coeff.time_periodic ? 1 : 0;
  w(&periodic, sizeof periodic);
  w(&coeff.period, sizeof coeff.period);
  const uint32_t dims[3] = {static_cast<uint32_t>(coeff.nx), static_cast<uint32_t>(coeff.ny),
                            static_cast<uint32_t>(coeff.nt)};
  w(dims, sizeof dims);
  w(coeff.values.data(), coeff.values.size() * sizeof(double));
  if (!out) throw io_error("write failed: " + path);
}

Coefficient load_coefficient(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);

  auto r = [&](void* p, size_t n) {
    in.read(static_cast<char*>(p), n);
    if (!in) throw io_error("truncated coefficient file: " + path);
  };

  char magic[9];
  r(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw io_error("not a coefficient file: " + path);
  uint32_t version = 0;
  r(&version, sizeof version);
  if (version != kVersion) throw io_error("unsupported coefficient file version");

  Coefficient c;
  r(&c.seed, sizeof c.seed);
  r(&c.eps_x, sizeof c.eps_x);
  r(&c.eps_t, sizeof c.eps_t);
  uint8_t periodic = 0;
  r(&periodic, sizeof periodic);
  c.time_periodic = periodic != 0;
  r(&c.period, sizeof c.period);
  uint32_t dims[3];
  r(dims, sizeof dims);
  c.nx = static_cast<int>(dims[0]);
  c.ny = static_cast<int>(dims[1]);
  c.nt = static_cast<int>(dims[2]);
  c.values.resize(static_cast<size_t>(c.nx) * c.ny * c.nt);
  r(c.values.data(), c.values.size() * sizeof(double));

  auto [mn, mx] = std::minmax_element(c.values.begin(), c.values.end());
  c.alpha = *mn;
  c.beta = *mx;
  if (c.alpha <= 0.0) throw io_error("coefficient file holds non-positive values");
  return c;
}

}  // namespace stlod

#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace stlod {

// Error taxonomy mirrored by the CLI exit codes.
class invalid_argument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class numerical_failure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// splitmix64: tiny, stateless-seedable generator with identical output on
// every platform. Used for all randomized data so experiments are
// reproducible from a single 64-bit seed.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1) with 53 random mantissa bits
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) {
    return low + next_double() * (high - low);
  }
};

// FNV-1a, used for cache fingerprints.
struct Fnv1a {
  uint64_t h = 0xcbf29ce484222325ull;

  void add_bytes(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  }
  void add_u64(uint64_t v) { add_bytes(&v, sizeof v); }
  void add_i64(int64_t v) { add_bytes(&v, sizeof v); }
  void add_f64(double v) { add_bytes(&v, sizeof v); }
};

// Instrumentation counters used by structural assertions in the tests: the
// online multiscale phase must never trigger fine-space solves or corrector
// recomputation.
struct Counters {
  std::atomic<uint64_t> corrector_blocks_computed{0};
  std::atomic<uint64_t> fine_space_solves{0};
  std::atomic<uint64_t> coarse_space_solves{0};
};

Counters& counters();

}  // namespace stlod

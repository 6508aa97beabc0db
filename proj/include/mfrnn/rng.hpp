#pragma once

#include <cmath>
#include <cstdint>

namespace mfrnn {

// Counter-based generator: value_i = splitmix64_finalizer(key + i * GOLDEN),
// with the key derived from (seed, stream). Draw i depends only on
// (seed, stream, i), so independent streams can be generated in any order
// (one stream per sample / per weight block) with identical results.
//
// Algorithm tag recorded in output metadata: see kAlgorithmTag.
class CounterRng {
 public:
  static constexpr const char* kAlgorithmTag = "splitmix64-keyed-stream-v1";

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(finalize(seed + kGolden * finalize(stream + kGolden))) {}

  std::uint64_t next_u64() { return finalize(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; consumes exactly two draws per call.
  double normal(double mean, double stddev) {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * kPi * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mfrnn

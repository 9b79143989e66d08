#pragma once

#include <cstdint>

namespace frbmed {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed; used to split one master seed into
/// per-equation and per-replicate streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Counter-based generator: draw i of stream (seed, stream) is a pure
/// function of (seed, stream, i), so streams can be consumed by any thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_seed(seed, stream)) {}

  std::uint64_t next() {
    return splitmix64(key_ + 0xD1B54A32D192ED03ULL * ++counter_);
  }

  /// Uniform integer in [0, n), rejection-sampled so there is no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t u = next();
    while (u >= limit) u = next();
    return u % n;
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace frbmed

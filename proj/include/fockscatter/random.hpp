#pragma once

#include <cstdint>
#include <random>

namespace fockscatter {

/// SplitMix64 finalizer, used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for substream `index` of `master`; distinct tags keep unrelated
/// consumers (disorder, Monte Carlo, bootstrap) apart.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(tag)) + index);
}

/// mt19937_64 with a platform-independent mapping to doubles.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double normal();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

namespace stream_tag {
inline constexpr std::uint64_t disorder = 0x44495352;    // "DISR"
inline constexpr std::uint64_t monte_carlo = 0x4d434d43; // "MCMC"
inline constexpr std::uint64_t bootstrap = 0x424f4f54;   // "BOOT"
inline constexpr std::uint64_t multistart = 0x53484f54;  // "SHOT"
}  // namespace stream_tag

}  // namespace fockscatter

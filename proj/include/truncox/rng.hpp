#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace truncox {

// Purpose tags keep RNG streams for different uses of the same replicate
// index disjoint, so adding a consumer never shifts another one's draws.
enum class RngPurpose : std::uint64_t {
  generator = 1,
  bootstrap = 2,
  permutation = 3,
  calibration = 4,
  pilot = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream derived from (seed, stream, purpose). Streams are
// cheap to construct, so parallel workers build their own from the
// replicate index and never share engine state.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream,
            RngPurpose purpose = RngPurpose::generator)
      : engine_(splitmix64(splitmix64(seed ^ 0x6a09e667f3bcc909ULL) ^
                           splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1)) ^
                splitmix64(static_cast<std::uint64_t>(purpose) * 0xd1b54a32d192ed03ULL + 2)) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1), 53-bit resolution; bit-stable across platforms
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased integer in [0, n)
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double exponential(double rate = 1.0) { return -std::log1p(-uniform()) / rate; }

private:
  std::mt19937_64 engine_;
};

}  // namespace truncox

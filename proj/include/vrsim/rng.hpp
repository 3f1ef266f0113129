// Deterministic RNG streams. One master seed expands into independent named
// streams; results are identical across platforms and thread counts because
// every stream is self-contained and we never touch implementation-defined
// std:: distributions.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace vrsim {

// Stream tags. A stream id is tag ^ hash of its coordinates, see stream_id().
enum : std::uint64_t {
  kStreamPlacement = 0x706c6163656d6e74ull,  // user placement
  kStreamShadow = 0x736861646f77696eull,     // per-link shadow fading
};

// SplitMix64, used only to expand seeds into generator state.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

// Mixes per-link coordinates into a stream id: draws for one link are
// independent of the order links are evaluated in, so link setup can run in
// parallel without changing results.
inline std::uint64_t stream_id(std::uint64_t tag, std::uint64_t a = 0,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
  SplitMix64 m{tag};
  m.state ^= m.next() + a;
  m.state ^= m.next() + b;
  m.state ^= m.next() + c;
  return m.next();
}

// xoshiro256** with explicit uniform/normal draws.
class Rng {
 public:
  Rng(std::uint64_t master_seed, std::uint64_t stream) {
    SplitMix64 m{master_seed ^ (0xd1342543de82ef95ull * stream)};
    for (auto& w : s_) w = m.next();
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Gaussian via Box-Muller. The spare value is discarded on purpose: one
  // draw consumes a fixed number of stream values, which keeps draw counts
  // predictable when streams are shared across features.
  double next_normal(double mean, double sigma) {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();  // log(0) guard; probability 2^-53
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_;
};

}  // namespace vrsim

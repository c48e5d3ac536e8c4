#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace snnc {

// One experiment seed fans out into independent streams (weight init, spike
// encoding, batch shuffling, ...). Derivation is a splitmix64-style hash of
// (seed, tag, indices) so every stream is a pure function of the master seed
// and the draws stay identical across platforms. The engine is mt19937_64,
// whose output sequence the standard pins down exactly; doubles are built
// from raw bits instead of std distributions because those are
// implementation-defined.

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed ^ mix64(tag)) ^ a) ^ b);
}

// Stream tags; keep values stable, they feed the seed derivation.
namespace stream {
constexpr std::uint64_t kWeightInit = 1;
constexpr std::uint64_t kShuffle = 2;
constexpr std::uint64_t kEncodeTrain = 3;
constexpr std::uint64_t kEncodeEval = 4;
constexpr std::uint64_t kSynthetic = 5;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 random bits.
  double next_unit() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Uniform integer in [0, n). Modulo bias is < 2^-50 for any n we use.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

 private:
  std::mt19937_64 engine_;
};

// Deterministic Fisher-Yates shuffle (std::shuffle draws through
// implementation-defined distributions).
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace snnc

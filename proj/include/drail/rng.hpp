#ifndef DRAIL_RNG_HPP_
#define DRAIL_RNG_HPP_

#include <cstdint>
#include <random>

namespace drail {

// splitmix64 finalizer; used to derive independent stream seeds.
inline uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream * 0x632be59bd9b4e019ULL + 1));
}

// Subsystem stream ids split off the single run seed.
enum class Stream : uint64_t {
  kEnv = 1,
  kPolicy = 2,
  kDiscriminator = 3,
  kDraws = 4,
  kExpert = 5,
  kEval = 6,
  kShuffle = 7,
};

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(mix_seed(seed)) {}
  Rng(uint64_t seed, Stream stream)
      : engine_(derive_seed(seed, static_cast<uint64_t>(stream))) {}

  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  // Uniform integer on [lo, hi].
  int64_t integer(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(engine_);
  }
  uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace drail

#endif  // DRAIL_RNG_HPP_

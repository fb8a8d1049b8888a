#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace scar {

// splitmix64 step, also used to mix seeds with stream tags. Self-contained so
// that every draw is byte-stable across compilers and platforms (std::
// distributions are not).
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Fold any number of tags into a seed to derive independent streams.
inline uint64_t mix_seed(uint64_t seed) { return seed; }

template <typename... Rest>
uint64_t mix_seed(uint64_t seed, uint64_t tag, Rest... rest) {
  uint64_t s = seed ^ (tag + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  splitmix64(s);
  return mix_seed(s, rest...);
}

// xoshiro256++ generator.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 24 bits of mantissa, exact in f32.
  float uniform() { return static_cast<float>(next_u64() >> 40) * 0x1p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at our ranges;
  // determinism is the contract.
  uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

  float normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller on (0,1] uniforms.
    float u1 = 1.0f - uniform();
    float u2 = uniform();
    float r = std::sqrt(-2.0f * std::log(u1));
    float a = 6.28318530717958647692f * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang for shape >= 1, boosted below 1.
  float gamma(float shape) {
    if (shape < 1.0f) {
      float u = uniform();
      while (u <= 0.0f) u = uniform();
      return gamma(shape + 1.0f) * std::pow(u, 1.0f / shape);
    }
    const float d = shape - 1.0f / 3.0f;
    const float c = 1.0f / std::sqrt(9.0f * d);
    for (;;) {
      float x = normal();
      float v = 1.0f + c * x;
      if (v <= 0.0f) continue;
      v = v * v * v;
      float u = uniform();
      if (u < 1.0f - 0.0331f * x * x * x * x) return d * v;
      if (u > 0.0f && std::log(u) < 0.5f * x * x + d * (1.0f - v + std::log(v))) return d * v;
    }
  }

  float beta(float a, float b) {
    float x = gamma(a);
    float y = gamma(b);
    float s = x + y;
    if (s <= 0.0f) return 0.5f;
    return x / s;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  float spare_ = 0.0f;
  bool has_spare_ = false;
};

}  // namespace scar

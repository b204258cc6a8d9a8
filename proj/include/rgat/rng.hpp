#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace rgat {

// SplitMix64 generator (Steele, Lea & Flood 2014). The algorithm is fully
// specified by its two mixing constants, so streams reproduce bit-for-bit
// across platforms and compilers. Independent streams for separate purposes
// (parameter init, shuffling, dropout, ...) are derived from the original
// seed with derive(); draws from a child never affect the parent.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform double in [0, 1), 53 mantissa bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n); Lemire multiply-shift (bias < n / 2^64)
  uint64_t uniform_int(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Child stream keyed by (original seed, tag, a, b). The tag is hashed with
  // FNV-1a and the result run through two SplitMix64 finalizer rounds.
  Rng derive(std::string_view tag, uint64_t a = 0, uint64_t b = 0) const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    uint64_t s = seed_ ^ h;
    s = mix(s + 0x9e3779b97f4a7c15ull * (a + 1));
    s = mix(s + 0x9e3779b97f4a7c15ull * (b + 1));
    return Rng(s);
  }

  uint64_t seed() const { return seed_; }

  // Fisher-Yates, backwards; j drawn via uniform_int(i + 1). permute_labels
  // and the shuffle tests replay this exact order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  uint64_t state_;
};

}  // namespace rgat

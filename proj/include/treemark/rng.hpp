#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace treemark {

inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (base, stage label, index).
// Every random decision in the toolkit flows through named derivations of
// one root seed, so runs are reproducible end to end.
inline uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index = 0) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label bytes
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  uint64_t state = base;
  splitmix64_next(state);
  state ^= h;
  splitmix64_next(state);
  state ^= index;
  return splitmix64_next(state);
}

// Deterministic RNG with unbiased bounded draws. Identical seeds produce
// identical streams on every platform (mt19937_64 plus our own sampling,
// no std::uniform_* distributions).
class DetRng {
 public:
  explicit DetRng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // Unbiased draw from [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("DetRng::below: n must be positive");
    uint64_t x, r;
    do {
      x = gen_();
      r = x % n;
    } while (x - r > static_cast<uint64_t>(-n));
    return r;
  }

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), returned ascending.
  std::vector<size_t> sample_indices(size_t n, size_t k);

 private:
  std::mt19937_64 gen_;
};

}  // namespace treemark

#include "treemark/rng.hpp"

#include <algorithm>
#include <numeric>

namespace treemark {

std::vector<size_t> DetRng::sample_indices(size_t n, size_t k) {
  if (k > n) throw std::invalid_argument("sample_indices: k exceeds n");
  std::vector<size_t> pool(n);
  std::iota(pool.begin(), pool.end(), size_t{0});
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace treemark

#include "spre/rng.hpp"

#include <algorithm>

namespace spre::rng {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, SmallRng& rng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) {
    pool[i] = i;
  }
  if (k > n) {
    k = n;
  }
  // Partial Fisher-Yates: after k swaps the first k slots are the sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace spre::rng

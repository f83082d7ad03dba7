#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace spre::rng {

/// FNV-1a 64-bit content hash. Stable across platforms and runs.
constexpr std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

/// Small deterministic generator (splitmix64 stream). Not cryptographic;
/// used so sequences are bit-identical regardless of standard library.
class SmallRng {
 public:
  explicit SmallRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [-1, 1).
  double next_signed_unit() { return next_unit() * 2.0 - 1.0; }

 private:
  std::uint64_t state_;
};

template <typename T>
void shuffle(std::vector<T>& v, SmallRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

/// Choose k distinct indices from [0, n) without replacement; returned ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, SmallRng& rng);

}  // namespace spre::rng

#pragma once

// Seeding and sampling helpers whose output is fixed across standard
// library implementations (std::uniform_int_distribution and std::shuffle
// are not).

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace affaudit {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for the `index`-th member of a `stream` of work items derived from
/// `seed`: splitmix64(splitmix64(seed ^ stream) + index). Used for per-tree
/// and per-iteration seeds so results do not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ (stream * 0xD1B54A32D192ED03ULL)) + index);
}

/// Counter-based 64-bit generator (the splitmix64 sequence). Cheap to seed,
/// which matters when every bootstrap iteration gets its own stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Uniform integer in [0, bound) by rejection (Lemire's multiply-shift).
template <typename Engine>
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  static_assert(Engine::min() == 0 && Engine::max() == ~std::uint64_t{0});
  if (bound <= 1) return 0;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const unsigned __int128 m = static_cast<unsigned __int128>(engine()) * bound;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

/// Uniform double in [0, 1) with 53 random bits.
template <typename Engine>
double uniform_unit(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

template <typename Engine, typename T>
void shuffle(std::span<T> items, Engine& engine) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(engine, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace affaudit

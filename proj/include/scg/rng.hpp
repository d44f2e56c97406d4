#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

namespace scg {

/// Root seed used across the library when the caller does not supply one.
inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

/// SplitMix64 finalizer; good avalanche for deriving substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Absorbs `v` into running hash `h` (order-sensitive, deterministic).
std::uint64_t absorb(std::uint64_t h, std::uint64_t v);

/// Chains absorb() over all parts starting from `root`.
std::uint64_t seed_of(std::uint64_t root, std::initializer_list<std::uint64_t> parts);

/**
 * Deterministic uniform stream. Wraps std::mt19937_64 (whose output sequence
 * is fixed by the standard) with an explicit mapping to doubles; the stdlib
 * distribution adapters are implementation-defined and are deliberately not
 * used, so results are reproducible across platforms and compilers.
 */
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

/**
 * Runs `replications` Monte Carlo replications split into fixed-size blocks.
 * Each block gets its own stream seeded by hash(substream_seed, block index),
 * and per-block accumulator vectors (length n_acc) are summed in block order.
 * The result is therefore independent of the number of worker threads.
 *
 * block_fn(stream, count, acc) must add `count` replications into acc[0..n_acc).
 */
std::vector<double> mc_accumulate(std::int64_t replications, std::uint64_t substream_seed,
                                  int max_threads, int n_acc,
                                  const std::function<void(RandomStream&, std::int64_t, double*)>& block_fn);

/// Monte Carlo / solver knobs shared by every stochastic evaluation.
struct McSettings {
  std::uint64_t seed = kDefaultSeed;
  std::int64_t replications = 1'000'000;
  int max_threads = 0;  // 0 = hardware concurrency
};

}  // namespace scg

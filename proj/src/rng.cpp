#include "scg/rng.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace scg {

namespace {
constexpr std::int64_t kBlockSize = 1 << 15;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t absorb(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

std::uint64_t seed_of(std::uint64_t root, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(root);
  for (std::uint64_t p : parts) h = absorb(h, p);
  return h;
}

std::vector<double> mc_accumulate(std::int64_t replications, std::uint64_t substream_seed,
                                  int max_threads, int n_acc,
                                  const std::function<void(RandomStream&, std::int64_t, double*)>& block_fn) {
  const std::int64_t n_blocks = (replications + kBlockSize - 1) / kBlockSize;
  std::vector<std::vector<double>> per_block(static_cast<std::size_t>(n_blocks));

  auto run_block = [&](std::int64_t b) {
    const std::int64_t count = std::min<std::int64_t>(kBlockSize, replications - b * kBlockSize);
    RandomStream rs(absorb(substream_seed, static_cast<std::uint64_t>(b)));
    std::vector<double> acc(static_cast<std::size_t>(n_acc), 0.0);
    block_fn(rs, count, acc.data());
    per_block[static_cast<std::size_t>(b)] = std::move(acc);
  };

  int threads = max_threads > 0 ? max_threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(n_blocks)));
  if (threads == 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    std::atomic<std::int64_t> next{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::int64_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Fixed reduction order: block 0, 1, 2, ... regardless of which thread ran what.
  std::vector<double> total(static_cast<std::size_t>(n_acc), 0.0);
  for (const auto& acc : per_block)
    for (int i = 0; i < n_acc; ++i) total[static_cast<std::size_t>(i)] += acc[static_cast<std::size_t>(i)];
  return total;
}

}  // namespace scg

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace convhawkes {

// Work is cut into fixed-size chunks independent of the worker count, so any
// per-chunk reduction combined in chunk order is bitwise reproducible.
inline constexpr std::size_t kDefaultChunk = 256;

[[nodiscard]] constexpr std::size_t chunk_count(std::size_t n, std::size_t chunk = kDefaultChunk) {
  return (n + chunk - 1) / chunk;
}

// Calls fn(chunk_index, begin, end) for every chunk of [0, n). threads == 0
// means hardware concurrency.
void parallel_chunks(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                     std::size_t chunk = kDefaultChunk);

using Rng = std::mt19937_64;

// splitmix64 finalizer over (seed, stream); substreams are addressed by counter.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

[[nodiscard]] inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace convhawkes

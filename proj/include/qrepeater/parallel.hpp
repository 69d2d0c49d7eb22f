// Minimal deterministic fork-join helpers.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace qrep {

// Number of worker threads; QREP_THREADS overrides the hardware count.
unsigned worker_count();

// Calls body(i) for every i in [0, n). Each index is visited exactly once;
// work is split into contiguous blocks so results written per index do not
// depend on the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Independent engine for task `index` of a run seeded with `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace qrep

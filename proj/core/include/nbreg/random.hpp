#pragma once

#include <cstdint>
#include <random>

namespace nbreg {

using Rng = std::mt19937_64;

/// Mixes a master seed with a stream index (splitmix64 finalizer). Replicate k of
/// any Monte-Carlo loop seeds its own generator with derive_seed(master, k), so
/// results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(derive_seed(master, stream));
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// executed exactly once; callers write results into per-index slots.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body);

/// Thread count from NBREG_THREADS, falling back to 1.
unsigned default_thread_count();

}  // namespace nbreg

#include "nbreg/detail/parallel.hpp"

#pragma once

// Per-replicate seed derivation and a small index-parallel loop.

#include <cstddef>
#include <cstdint>
#include <functional>

namespace skewpen {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// Seed for replicate `rep` of the study cell with sample size `n`.
std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t n, std::uint64_t rep);

/// Worker count: `requested` if positive, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Calls body(i) for i in [0, count) on `threads` workers pulling indices
/// from a shared counter. The first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace skewpen

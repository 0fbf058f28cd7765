#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace turblucky {

// Worker count: TURBLUCKY_THREADS if set, else hardware concurrency.
// set_deterministic(true) pins it to 1.
int thread_count();
void set_deterministic(bool on);
bool deterministic();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, so any
// per-index output stays independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// SplitMix64; derives independent RNG substream seeds from (seed, index...).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace turblucky

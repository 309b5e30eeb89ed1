#pragma once

#include <cstddef>
#include <functional>

namespace cmla {

/// Worker count: hardware concurrency, capped by the CMLA_THREADS
/// environment variable when it holds a positive integer.
std::size_t thread_count();

/// Runs body(i) for every i in [0, n). Iterations are split into contiguous
/// chunks; body must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cmla

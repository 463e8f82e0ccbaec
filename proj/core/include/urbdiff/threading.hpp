#pragma once

#include <cstdint>
#include <functional>

namespace urbdiff {

// Process-wide cap on worker threads. Resolution order: explicit
// set_max_threads() > URBDIFF_THREADS env var > hardware concurrency.
int max_threads();
void set_max_threads(int n);

// Runs fn over [0, n) in contiguous chunks, one per worker. Falls back to a
// plain loop when the cap is 1 or n is small. fn receives [begin, end).
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace urbdiff

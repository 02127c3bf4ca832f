#pragma once

#include <cstddef>
#include <functional>

namespace fadkit {

/// Worker count used when a caller passes 0: `FADKIT_THREADS` if set to a
/// positive integer, otherwise the hardware concurrency (at least 1).
int default_thread_count();

/// Resolves a requested thread count (0 means default).
int resolve_threads(int requested);

/// Runs body(i) for every i in [0, n) on up to `threads` workers. Each index
/// is visited exactly once; results must be written to per-index slots so
/// the outcome does not depend on scheduling. The first exception thrown by
/// any body is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace fadkit

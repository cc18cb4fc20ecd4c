#pragma once

#include <cstddef>
#include <functional>

namespace certdp {

// Upper bound on worker threads used by parallel_for (default 1). Outputs never
// depend on this value: every parallel loop writes to disjoint, index-addressed
// slots and reductions happen afterwards in index order.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs body(i) for i in [0, n). Work is split into contiguous chunks. Nested
// calls from inside a worker run serially on the calling thread. The first
// exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t min_chunk = 1);

}  // namespace certdp

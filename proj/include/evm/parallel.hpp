#pragma once

#include <cstddef>
#include <functional>

namespace evm {

/// Maps 0 to the EVM_THREADS environment variable if set, otherwise to the
/// hardware concurrency; any positive request passes through unchanged.
unsigned resolve_threads(unsigned requested);

/// Runs fn(begin, end) over [0, n) split into one contiguous chunk per
/// worker. Chunks are disjoint, so results are identical for any thread
/// count as long as fn only writes to its own slice.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace evm

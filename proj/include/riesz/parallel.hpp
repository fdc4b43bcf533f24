#pragma once

#include <functional>

namespace riesz {

/// Worker count: RIESZFLOW_THREADS if set, else hardware concurrency.
int max_threads();

/// Static block partition of [begin, end) over the worker threads. Each
/// index is processed exactly once; results must go to per-index slots so
/// the outcome is independent of scheduling.
void parallel_for(long begin, long end, const std::function<void(long)>& fn);

/// Run fn(block) over contiguous blocks [b_begin, b_end); same guarantees.
void parallel_blocks(long begin, long end,
                     const std::function<void(long, long)>& fn);

} // namespace riesz

#pragma once

#include <functional>

namespace cpn {

/// Worker cap: min(CHARPROP_THREADS, hardware concurrency), at least 1.
int worker_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous ranges
/// across workers; nested calls run serially so callers can parallelize
/// at whichever level suits them.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace cpn

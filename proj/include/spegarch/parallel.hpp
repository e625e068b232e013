#pragma once

#include <functional>

namespace spegarch {

// Resolves a requested thread count: positive values pass through, zero means
// "decide for me" (the ST_EGARCH_THREADS environment variable if set, else the
// hardware concurrency). Always at least 1.
int resolve_threads(int requested);

// Runs fn(0) .. fn(n_tasks - 1) on up to n_threads workers. Tasks are handed
// out in index order from a shared counter; the first exception thrown by any
// task is rethrown on the caller after all workers stop picking up new work.
void parallel_for(int n_tasks, int n_threads, const std::function<void(int)>& fn);

}  // namespace spegarch

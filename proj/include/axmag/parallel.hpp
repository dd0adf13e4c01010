#pragma once

#include <cstddef>
#include <functional>

namespace axmag {

/// Worker count used by parallel_for; 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Work is
/// split into contiguous blocks so results do not depend on scheduling.
/// The first exception thrown by any task is rethrown after all finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace axmag

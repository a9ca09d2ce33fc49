#pragma once

#include <cstddef>
#include <functional>

namespace jpo {

/// Worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Calls fn(i) for i in [0, n), spread over worker threads. Each index runs
/// exactly once; callers write results into index-addressed slots so the
/// outcome never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace jpo

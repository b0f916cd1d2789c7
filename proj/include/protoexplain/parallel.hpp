#pragma once

#include <cstddef>
#include <functional>

namespace protoexplain {

/// Worker cap: PROTOEXPLAIN_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write results into pre-sized slots so output order never depends on
/// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace protoexplain

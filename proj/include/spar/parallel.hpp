#pragma once

#include <cstddef>
#include <functional>

namespace spar {

/// Worker cap used by batch operations. Resolution order: set_thread_count(),
/// then SPAR_THREADS, then hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs fn(i) for i in [0, n) on up to thread_count() workers. Each index is
/// visited exactly once; callers write into preallocated slot i, so output
/// order never depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace spar

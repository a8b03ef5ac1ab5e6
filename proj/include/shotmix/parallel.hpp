#pragma once

#include <cstddef>
#include <functional>

namespace shotmix {

/// Runs fn(i) for i in [0, count) across up to `workers` threads. Callers
/// write results into preallocated slots by index, so the merged outcome is
/// identical for any worker count. Exceptions are rethrown on the caller.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace shotmix

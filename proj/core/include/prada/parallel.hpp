#pragma once

#include <cstddef>
#include <functional>

namespace prada {

/// Worker count from PRADA_WORKERS, falling back to the hardware concurrency.
std::size_t default_worker_count();

/// Runs job(i) for i in [0, count) on a bounded pool of threads. Jobs must not
/// share mutable state; callers write into pre-sized, index-addressed slots so
/// the result does not depend on scheduling. The first exception thrown by a
/// job is rethrown after all workers have joined.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job,
                  std::size_t workers = 0);

}  // namespace prada

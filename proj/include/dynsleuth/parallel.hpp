#pragma once

#include <cstddef>
#include <functional>

namespace dynsleuth {

/// Worker count: DYNSLEUTH_JOBS env var if set, else hardware concurrency.
int default_jobs();

/// Runs body(i) for i in [0, count). With jobs > 1 the indices are pulled
/// from a shared counter by a small thread pool; each index writes only its
/// own output slot, so results are identical to the serial order.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace dynsleuth

#pragma once

#include <cstddef>
#include <functional>

namespace fracback {

/// Worker-thread cap: min(hardware_concurrency, FRACBACK_THREADS if set).
int max_threads();

/// Runs fn(i) for i in [0, n) on up to max_threads() workers.
/// Indices are split into contiguous chunks; fn must be safe to call
/// concurrently for distinct i. Exceptions propagate to the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace fracback

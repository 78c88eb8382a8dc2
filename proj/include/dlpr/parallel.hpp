#pragma once

#include <cstddef>
#include <functional>

namespace dlpr {

// Worker count from DLPR_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

// Runs body(i) for i in [0, n) over contiguous static chunks. Callers must only
// write to disjoint per-index outputs; no reduction happens across workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dlpr

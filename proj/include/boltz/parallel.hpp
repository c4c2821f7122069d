#pragma once

#include <cstddef>
#include <functional>

namespace boltz {

// Process-wide cap on worker threads used by operator evaluation.
// Results never depend on this value.
void set_worker_count(int n);
int worker_count();

// Runs body(begin, end) over contiguous blocks covering [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace boltz

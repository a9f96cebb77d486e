#pragma once

#include <cstddef>
#include <functional>

namespace delaydense {

// Worker count: DELAYDENSE_THREADS if set (>=1), otherwise hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Indices are split into contiguous chunks, one
// per worker; body must only write to slots owned by index i so that results
// do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace delaydense

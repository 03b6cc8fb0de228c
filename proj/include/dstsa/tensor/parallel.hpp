#pragma once

#include <cstddef>
#include <functional>

namespace dstsa {

// Worker count for batch-parallel kernels: DSTSA_THREADS when set, otherwise
// the hardware concurrency. Always at least 1.
int worker_count();
void set_worker_count(int workers);

// Runs body(i) for i in [0, n). Iterations must write disjoint memory; the
// static partition keeps results independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dstsa

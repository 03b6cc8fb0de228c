#include "dstsa/tensor/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dstsa {

namespace {
int initial_workers() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("DSTSA_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1 && cap < hw) return cap;
    } catch (const std::exception&) {
    }
  }
  return hw;
}

std::atomic<int>& workers() {
  static std::atomic<int> w{initial_workers()};
  return w;
}
}  // namespace

int worker_count() { return workers().load(); }

void set_worker_count(int n) { workers().store(n < 1 ? 1 : n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int w = worker_count();
  if (w <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static) num_threads(w)
  for (long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace dstsa

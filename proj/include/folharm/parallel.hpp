#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace folharm {

// Worker count for node-parallel kernels; defaults to the available cores.
void set_thread_count(int threads);
int thread_count();

// Grids below this size run serially; thread start-up dominates otherwise.
inline constexpr std::size_t kParallelThreshold = 4096;

// Runs fn(node) for every node. Iterations must be independent. The first
// exception thrown by any iteration is rethrown on the calling thread.
template <class Fn>
void for_each_node(std::size_t count, Fn&& fn) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const long n = static_cast<long>(count);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (count >= kParallelThreshold)
  for (long i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace folharm

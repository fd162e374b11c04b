#include "folharm/parallel.hpp"

#include <algorithm>
#include <thread>

namespace folharm {

namespace {
int g_threads = 0;
}

void set_thread_count(int threads) { g_threads = std::max(0, threads); }

int thread_count() {
  if (g_threads > 0) return g_threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace folharm

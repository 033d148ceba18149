#include "ozmm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ozmm {

namespace {

std::atomic<int> g_override{0};

int env_cap() {
  static const int cap = [] {
    const char* s = std::getenv("OZMM_THREADS");
    if (!s) return 0;
    const long v = std::strtol(s, nullptr, 10);
    return v > 0 ? static_cast<int>(v) : 0;
  }();
  return cap;
}

}  // namespace

int thread_count() {
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const int o = g_override.load(std::memory_order_relaxed); o > 0) n = o;
  if (const int c = env_cap(); c > 0) n = std::min(n, c);
  return std::max(n, 1);
}

void set_thread_count(int n) { g_override.store(n, std::memory_order_relaxed); }

}  // namespace ozmm

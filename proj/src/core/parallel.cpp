#include "vdfield/parallel.hpp"

#include <atomic>
#include <cstdlib>

namespace vdfield {

namespace {

int default_threads() {
  if (const char* env = std::getenv("VDFIELD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int>& threads() {
  static std::atomic<int> n{default_threads()};
  return n;
}

}  // namespace

int thread_count() { return threads().load(std::memory_order_relaxed); }

void set_thread_count(int n) { threads().store(n > 0 ? n : default_threads()); }

}  // namespace vdfield

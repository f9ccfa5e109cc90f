#include "nmfvi/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nmfvi {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_num_threads(unsigned n) { g_threads = std::max(1u, n); }
unsigned num_threads() { return g_threads; }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(g_threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(count, lo + block);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace nmfvi

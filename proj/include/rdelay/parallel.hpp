#ifndef RDELAY_PARALLEL_HPP
#define RDELAY_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace rdelay {

// Worker count for independent sweeps: RDTOOL_THREADS when set, otherwise
// the hardware concurrency.
inline unsigned sweep_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RDTOOL_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = static_cast<unsigned>(cap);
    } catch (...) {
    }
  }
  return n;
}

// out[i] = fn(i) for i in [0, count). Each index is evaluated exactly once;
// results land in index order regardless of scheduling.
template <class T, class Fn> std::vector<T> parallel_map(std::size_t count, Fn&& fn) {
  std::vector<T> out(count);
  const unsigned workers = std::min<std::size_t>(sweep_threads(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

} // namespace rdelay

#endif

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace seesaw {

/// Worker count: SEESAW_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("SEESAW_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(index, slot) for every index in [0, n). `slot` is in
/// [0, workers) and identifies the calling worker, so per-worker resources
/// (environments, scratch buffers) can be indexed by it. Results must be
/// written by index; which worker runs which index is unspecified. The first
/// exception thrown stops further work and is rethrown.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t, unsigned)>& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&](unsigned slot) {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i, slot);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned s = 1; s < workers; ++s) pool.emplace_back(run, s);
  run(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace seesaw

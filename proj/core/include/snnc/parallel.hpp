#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace snnc {

// Runs fn(chunk_index) for chunk_index in [0, num_chunks) on up to
// num_threads workers (0 = hardware concurrency). Work is pulled from an
// atomic counter; callers that need deterministic reductions should write
// each chunk's result into its own slot and combine the slots in index
// order afterwards.
inline void parallel_for_chunks(std::size_t num_chunks, unsigned num_threads,
                                const std::function<void(std::size_t)>& fn) {
  if (num_chunks == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (num_threads == 0) num_threads = hw == 0 ? 1 : hw;
  num_threads = static_cast<unsigned>(
      std::min<std::size_t>(num_threads, num_chunks));

  if (num_threads <= 1) {
    for (std::size_t i = 0; i < num_chunks; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= num_chunks || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(num_threads);
  for (unsigned t = 0; t < num_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace snnc

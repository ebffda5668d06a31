#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dcml {

// Runs body(i) for i in [0, n); results are written per index so the outcome
// does not depend on the number of threads.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(n, 1024))));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first;
  std::size_t first_index = SIZE_MAX;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += t) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (i < first_index) {
            first_index = i;
            first = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace dcml

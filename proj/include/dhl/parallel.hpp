#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace dhl {

// Runs body(i) for i in [0, n).  jobs <= 0 selects the hardware thread count.
// Indices are strided across workers and every item writes only its own slot,
// so results are identical for any job count.  The lowest-index exception is
// rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t n, int jobs, Body&& body) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : hw;
  if (workers > n) workers = n == 0 ? 1 : n;

  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  std::size_t first = n;
  std::exception_ptr to_throw;
  for (std::size_t w = 0; w < workers; ++w) {
    if (errors[w] && error_index[w] < first) {
      first = error_index[w];
      to_throw = errors[w];
    }
  }
  if (to_throw) std::rethrow_exception(to_throw);
}

}  // namespace dhl

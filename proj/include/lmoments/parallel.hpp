#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace lmoments {

/// Evaluates f(0), ..., f(count-1) on up to `threads` workers and returns the
/// results in index order. Each index is computed by exactly one call, so the
/// output does not depend on the worker count. The first exception (lowest
/// index) is rethrown after all workers join.
template <class F>
auto parallel_map(std::size_t count, unsigned threads, F&& f)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(count);
  threads = std::max(1u, threads);
  const std::size_t workers = std::min<std::size_t>(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }

  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      // Strided assignment keeps load balanced when cost grows with index.
      for (std::size_t i = w; i < count; i += workers) {
        try {
          out[i] = f(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  std::size_t first = count;
  std::exception_ptr err;
  for (std::size_t w = 0; w < workers; ++w) {
    if (errors[w] && error_index[w] < first) {
      first = error_index[w];
      err = errors[w];
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace lmoments

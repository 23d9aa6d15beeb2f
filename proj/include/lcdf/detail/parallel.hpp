#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <stdexcept>
#include <thread>
#include <vector>

namespace lcdf::detail {

// One deterministic value per index, partitioned across threads in fixed-size
// chunks. values[t] must depend only on t, so the merged result is identical
// for every thread count.
template <typename PerIndex>
std::vector<double> run_indexed(std::size_t count, int threads, PerIndex per_index) {
  if (count == 0) throw std::invalid_argument("run_indexed: need count >= 1");
  if (threads < 1) threads = 1;
  std::vector<double> values(count);
  if (threads == 1) {
    for (std::size_t t = 0; t < count; ++t) values[t] = per_index(t);
    return values;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  constexpr std::size_t kChunk = 16;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        while (true) {
          std::size_t begin = next.fetch_add(kChunk);
          if (begin >= count) break;
          std::size_t end = std::min(begin + kChunk, count);
          for (std::size_t t = begin; t < end; ++t) values[t] = per_index(t);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return values;
}

}  // namespace lcdf::detail

#pragma once

// Worker-count control and reductions whose rounding does not depend on it.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace toyns {

namespace detail {
inline std::atomic<int>& worker_count_ref() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

inline int worker_count() { return detail::worker_count_ref().load(); }
inline void set_worker_count(int n) { detail::worker_count_ref().store(std::max(1, n)); }

/// Runs body(begin, end) over contiguous chunks of [0, n). Bodies must write
/// disjoint outputs.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(worker_count()), std::max<std::size_t>(n, 1));
  if (workers <= 1 || n < 2048) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

/// Pairwise sum of values[0..n) with a fixed split point sequence.
inline double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline constexpr std::size_t kReductionBlock = 4096;

/// Deterministic sum of term(i) for i in [0, n). Blocks are fixed-size and
/// combined pairwise, so the result is bitwise identical for any worker count.
template <class Term>
double deterministic_sum(std::size_t n, Term&& term) {
  if (n == 0) return 0.0;
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> buf(kReductionBlock);
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t lo = b * kReductionBlock;
      const std::size_t hi = std::min(n, lo + kReductionBlock);
      for (std::size_t i = lo; i < hi; ++i) buf[i - lo] = term(i);
      partial[b] = pairwise_sum(std::span<const double>(buf.data(), hi - lo));
    }
  });
  return pairwise_sum(partial);
}

inline double deterministic_sum(std::span<const double> values) {
  return deterministic_sum(values.size(), [&](std::size_t i) { return values[i]; });
}

}  // namespace toyns

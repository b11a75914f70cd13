#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace mmdom {

// Runs fn(0..n-1) on up to `threads` workers and returns the results in index
// order. The first exception by index is rethrown, so outcomes never depend
// on scheduling.
template <class F>
auto parallel_indexed(std::size_t n, unsigned threads, F&& fn) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      slots[i].emplace(fn(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Lowest subtree index that found a witness. Results are merged in index
// order and the merge stops there, so higher subtrees may give up early
// without changing any outcome.
class FirstHit {
 public:
  void record(std::size_t i) {
    auto cur = best_.load();
    while (i < cur && !best_.compare_exchange_weak(cur, i)) {
    }
  }
  bool superseded(std::size_t i) const { return best_.load(std::memory_order_relaxed) < i; }

 private:
  std::atomic<std::size_t> best_{std::numeric_limits<std::size_t>::max()};
};

// base^exp, saturating at UINT64_MAX.
inline std::uint64_t saturating_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base) return std::numeric_limits<std::uint64_t>::max();
    r *= base;
  }
  return r;
}

}  // namespace mmdom

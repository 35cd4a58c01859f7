#pragma once

#include <cstddef>
#include <functional>

namespace apfx {

// Process-wide worker count used by scenario loops. Results never depend on it:
// every loop writes disjoint per-scenario slots and reductions run serially.
void set_thread_count(std::size_t n);
std::size_t thread_count() noexcept;

// Calls body(begin, end, worker) on contiguous chunks covering [0, n).
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace apfx

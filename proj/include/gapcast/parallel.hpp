#pragma once

#include <cstdint>
#include <exception>

namespace gapcast {

/* Every parallel kernel in the library has a serial twin selected by this
   flag. The two paths must produce bit-identical results: parallel loops
   write into preallocated slots indexed by loop counter and never reduce
   in scheduling order. */
enum class ExecMode { kSerial, kParallel };

/* Worker cap: min(OpenMP max threads, GAPCAST_THREADS when set to a
   positive integer). Affects timing only, never results. */
int max_threads();

namespace detail {
void run_parallel(std::int64_t n, void* ctx, void (*call)(void*, std::int64_t));
}

template <typename Body>
void parallel_for(std::int64_t n, ExecMode mode, Body&& body) {
  if (mode == ExecMode::kSerial || n <= 1 || max_threads() <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  auto thunk = [](void* ctx, std::int64_t i) { (*static_cast<Body*>(ctx))(i); };
  detail::run_parallel(n, &body, thunk);
}

}  // namespace gapcast

#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lpq {

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// path; `parallel` must produce bit-identical results.
enum class Exec { serial, parallel };

template <class Fn>
void for_each_index(Exec exec, std::size_t count, Fn&& fn) {
  if (exec == Exec::parallel) {
    // Exceptions cannot cross the OpenMP region; keep the one from the lowest
    // index so the rethrown error matches the serial path.
    std::mutex guard;
    std::exception_ptr first;
    std::size_t first_index = count;
    const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        const std::lock_guard<std::mutex> lock(guard);
        if (static_cast<std::size_t>(i) < first_index) {
          first_index = static_cast<std::size_t>(i);
          first = std::current_exception();
        }
      }
    }
    if (first) std::rethrow_exception(first);
    return;
  }
  for (std::size_t i = 0; i < count; ++i) fn(i);
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace lpq

#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bplp {

/// Number of OpenMP workers currently configured (1 without OpenMP).
inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Applies the worker cap from BPLP_WORKERS, if set. Returns the cap in use.
int configure_workers_from_env();

/// Runs body(i, scratch) for i in [0, n) across OpenMP workers with dynamic
/// scheduling. Each worker owns one scratch object made by make_scratch().
/// The first exception thrown by any body is rethrown on the caller.
template <class MakeScratch, class Body>
void parallel_rows(std::size_t n, MakeScratch make_scratch, Body body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel
  {
    auto scratch = make_scratch();
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i), scratch);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bplp

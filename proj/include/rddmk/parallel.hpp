#pragma once

// Deterministic data-parallel loop: every index writes only its own slots, so
// results are identical for any worker count. Exceptions are captured per
// index and the lowest-index one is rethrown after the join, which keeps
// error behavior independent of scheduling too.

#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rddmk {

template <class F>
void parallel_for(int n, int workers, F&& body) {
  if (n <= 0) return;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
#ifdef _OPENMP
  if (workers > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
  } else
#endif
  {
    (void)workers;
    for (int i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace rddmk

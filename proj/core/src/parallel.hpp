#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef NNRK_HAVE_OPENMP
#include <omp.h>
#endif

namespace nnrk::detail {

/// Runs fn(i) for i in [0, n) in fixed-size chunks. Results must be written to
/// per-index storage; the exception of the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  constexpr std::ptrdiff_t chunk = 64;
  const auto count = static_cast<std::ptrdiff_t>(n);
  std::exception_ptr error;
  std::ptrdiff_t error_index = count;
  std::mutex guard;
#ifdef NNRK_HAVE_OPENMP
#pragma omp parallel for schedule(static, 1) if (count > chunk)
#endif
  for (std::ptrdiff_t start = 0; start < count; start += chunk) {
    const std::ptrdiff_t stop = start + chunk < count ? start + chunk : count;
    for (std::ptrdiff_t i = start; i < stop; ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        break;
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

inline int max_threads() {
#ifdef NNRK_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef NNRK_HAVE_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace nnrk::detail

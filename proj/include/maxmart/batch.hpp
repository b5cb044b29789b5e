#pragma once

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace maxmart {

// Execution policy for path batches. Per-path work is a pure function of
// (seed, path_index), and per-path results land in slots indexed by path, so
// serial and parallel runs produce identical bytes; the serial policy is the
// reference the parallel kernels are tested against.
enum class Exec { serial, parallel };

#ifdef _OPENMP
inline bool openmp_enabled() noexcept { return true; }
inline int max_threads() noexcept { return omp_get_max_threads(); }
#else
inline bool openmp_enabled() noexcept { return false; }
inline int max_threads() noexcept { return 1; }
#endif

// Runs fn(i) for i in [0, n). Path lengths can vary by orders of magnitude
// under stopping rules, hence the dynamic schedule.
template <class Fn>
void for_each_path(std::int64_t n, Exec exec, Fn&& fn) {
#ifdef _OPENMP
  if (exec == Exec::parallel && n > 1) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

// Parallel map into a pre-sized vector followed by an index-ordered serial
// fold: deterministic regardless of thread count.
template <class R, class Map, class Fold>
void map_paths_fold(std::int64_t n, Exec exec, Map&& map, Fold&& fold) {
  std::vector<R> slots(static_cast<std::size_t>(n));
  for_each_path(n, exec, [&](std::int64_t i) {
    slots[static_cast<std::size_t>(i)] = map(i);
  });
  for (std::int64_t i = 0; i < n; ++i)
    fold(slots[static_cast<std::size_t>(i)]);
}

}  // namespace maxmart

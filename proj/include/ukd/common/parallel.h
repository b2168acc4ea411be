#ifndef UKD_COMMON_PARALLEL_H_
#define UKD_COMMON_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace ukd {

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure by
// index order once every task has finished.
void ParallelFor(std::size_t n, int jobs,
                 const std::function<void(std::size_t)>& fn);

}  // namespace ukd

#endif  // UKD_COMMON_PARALLEL_H_

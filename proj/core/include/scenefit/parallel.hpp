#pragma once

#include <cstddef>
#include <functional>

namespace scenefit {

/// Runs fn(i) for i in [0, n) over a static block partition of `threads`
/// workers. Each index is processed exactly once and results must be written
/// to per-index slots, so the outcome does not depend on the thread count.
/// threads <= 1 runs inline. The first exception (lowest block) is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace scenefit

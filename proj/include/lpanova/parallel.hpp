#pragma once

#include <cstddef>
#include <functional>

namespace lpanova {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Work is handed out by index; callers write results into
/// per-index slots so output never depends on scheduling. The first
/// exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace lpanova

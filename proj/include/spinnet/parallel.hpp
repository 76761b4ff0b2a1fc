// parallel.hpp — minimal worker pool for independent cells.

#pragma once

#include <cstddef>
#include <functional>

namespace spinnet {

int resolve_threads(int requested);  // 0 -> hardware concurrency

// Runs body(0..count-1) across threads; rethrows the first escaped exception
// after all workers join. Output determinism is the caller's job (index-keyed
// result slots).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

} // namespace spinnet

#pragma once

#include <cstddef>
#include <functional>

namespace capl
{

/// Worker count: CAPL_THREADS if set and positive, else the hardware count.
unsigned worker_count();

/// Runs fn(begin, end) over contiguous chunks of [0, n) on up to
/// worker_count() threads. Chunk boundaries depend only on n and the worker
/// count, so results are reproducible when fn writes disjoint outputs.
void parallel_for(std::size_t n, std::function<void(std::size_t, std::size_t)> const &fn);

} // namespace capl

#pragma once

#include <cstddef>
#include <functional>

namespace heteronet {

/// Worker count: hardware concurrency, capped by HETERONET_THREADS when set.
std::size_t worker_count();

/// Splits [0, count) into contiguous blocks and runs body(begin, end) on up
/// to worker_count() threads. The first exception thrown by any block is
/// rethrown after all workers finish.
void parallel_blocks(std::size_t count, std::size_t min_block,
                     const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace heteronet

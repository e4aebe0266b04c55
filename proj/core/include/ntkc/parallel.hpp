#pragma once

#include <cstddef>
#include <functional>

namespace ntkc {

/// Fixed row-block size for blocked all-pairs work. It does not depend on the
/// worker count, so every block is computed identically however many threads run.
inline constexpr std::ptrdiff_t kRowBlock = 128;

/// Worker cap. Reads CLUSTER_THREADS on every call; unset, empty or invalid
/// values fall back to the hardware concurrency.
unsigned thread_count();

/// Runs fn(t) for every t in [0, tasks) on up to thread_count() workers.
/// Tasks must write to disjoint outputs. If several tasks throw, the exception
/// from the lowest task index is rethrown.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& fn);

/// Number of kRowBlock-sized blocks covering n rows.
inline std::size_t row_block_count(std::ptrdiff_t n) {
  return n <= 0 ? 0 : static_cast<std::size_t>((n + kRowBlock - 1) / kRowBlock);
}

}  // namespace ntkc

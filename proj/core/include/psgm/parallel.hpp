#pragma once

#include <cstdint>
#include <functional>

namespace psgm {

/// Worker count used by all parallel loops. 0 restores the hardware default.
void set_num_threads(int n);
int num_threads();

/// Runs fn(begin, end) over a fixed contiguous partition of [0, n).
/// The partition depends only on n and the configured worker count, and
/// chunks never overlap, so results are identical for any worker count as
/// long as fn writes disjoint state per index.
void parallel_chunks(std::int64_t n,
                     const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace psgm

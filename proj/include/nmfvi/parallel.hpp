#pragma once

#include <cstddef>
#include <functional>

namespace nmfvi {

/// Worker count used by the data-parallel loops (default 1).
void set_num_threads(unsigned n);
unsigned num_threads();

/// Calls fn(i) for i in [0, count). Work is split into contiguous blocks;
/// callers write results into per-index slots so output never depends on
/// the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace nmfvi

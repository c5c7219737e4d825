#pragma once

#include <cstddef>
#include <functional>

namespace mlseq {

/// Run fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Tasks must write to disjoint slots; completion order is
/// unspecified. Exceptions from tasks are rethrown on the caller.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mlseq

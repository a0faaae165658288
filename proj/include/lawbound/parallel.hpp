#pragma once

#include <cstddef>
#include <functional>

namespace lawbound {

// Worker cap from LAWBOUND_THREADS (default: hardware concurrency).
int worker_count();
void set_worker_count(int workers);  // 0 restores the environment default

// Runs body(i) for i in [0, count). Each index must write only its own slot;
// reductions happen afterwards in index order, so results never depend on the
// worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace lawbound

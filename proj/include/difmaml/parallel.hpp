#pragma once

#include <functional>

namespace difmaml {

// Worker cap from DIFMAML_THREADS (>= 1); defaults to hardware concurrency.
int worker_count();

// Runs fn(0..n-1) across workers. Each index must write only to its own
// output slot; reductions happen afterwards in index order, so results are
// identical for any worker count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace difmaml

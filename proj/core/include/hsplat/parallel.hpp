#pragma once

#include <cstddef>
#include <functional>

namespace hsplat {

/// Worker count used by rendering kernels. Defaults to HSPLAT_THREADS or the
/// hardware concurrency. Results never depend on this value: work is split
/// into fixed chunks and reductions run in chunk order.
int thread_count();
void set_thread_count(int n);

/// Runs body(chunk) for chunk in [0, chunks). Chunks are claimed dynamically;
/// callers must write only to chunk-owned storage.
void parallel_for(std::size_t chunks, const std::function<void(std::size_t)>& body);

}  // namespace hsplat

#pragma once

#include <cstddef>
#include <functional>

namespace zippca {

// Number of workers to use when the caller passes 0.
unsigned default_thread_count();

/// Run body(0) .. body(count-1) on up to `threads` workers. Work is handed out
/// by index; if any call throws, the exception from the lowest failing index
/// is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace zippca

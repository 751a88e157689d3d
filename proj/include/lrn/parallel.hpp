#pragma once

#include <cstddef>
#include <functional>

namespace lrn {

/// Default worker count: hardware concurrency, at least 1.
unsigned default_threads();

/// Split [0, count) into `chunks` contiguous ranges and run `body(chunk, begin, end)`
/// on up to `threads` workers. Chunk boundaries depend only on `count` and `chunks`,
/// never on the thread count, so per-chunk results merged in chunk order are
/// reproducible for any `threads`.
void parallel_chunks(std::size_t count, std::size_t chunks, unsigned threads,
                     const std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>& body);

/// Convenience wrapper: body(i) for each i, no ordering guarantees.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace lrn

#pragma once

#include <cstddef>
#include <functional>

namespace xbar {

/// Worker count used when a call site passes 0. Starts at the value of
/// XBAR_THREADS, falling back to 1.
std::size_t default_threads();
void set_default_threads(std::size_t threads);

/// Runs body(i) for i in [0, count) on up to `threads` workers.
///
/// Work is split into contiguous static chunks. Callers write results into
/// pre-sized slots indexed by i, so the output never depends on scheduling.
/// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace xbar

#pragma once

#include <functional>

namespace ksadi {

/// Runs body(begin, end) over contiguous chunks of [0, count).
///
/// threads <= 1 runs inline on the calling thread. Otherwise the range is
/// split into `threads` chunks on fresh std::threads; the first exception
/// thrown by any chunk is rethrown after all chunks finish.
void parallel_for(int count, int threads, const std::function<void(int begin, int end)>& body);

}  // namespace ksadi

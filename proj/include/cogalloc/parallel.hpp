#pragma once

#include <cstddef>
#include <functional>

namespace cogalloc {

/// Runs body(i) for i in [0, n) on up to `jobs` threads. jobs <= 1 runs
/// inline. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace cogalloc

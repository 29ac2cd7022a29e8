#pragma once

#include <cstddef>
#include <functional>

namespace lossval {

/// Runs body(0..n-1) on up to `jobs` threads. Indices are claimed in order;
/// the first exception thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body);

/// LOSSVAL_JOBS if set to a positive integer, otherwise the hardware thread count.
std::size_t default_jobs();

}  // namespace lossval

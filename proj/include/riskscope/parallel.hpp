// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <functional>

namespace riskscope::numerics {

/// Worker cap: RISKSCOPE_THREADS when set (minimum 1), hardware concurrency
/// otherwise.
std::size_t thread_cap();

/// Runs fn(0) .. fn(n-1) on up to thread_cap() workers. Each index owns its
/// output slot, so results are independent of scheduling. Exceptions are
/// captured and the first one rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace riskscope::numerics

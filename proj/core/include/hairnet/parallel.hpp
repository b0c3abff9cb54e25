#pragma once

#include <cstddef>
#include <functional>

namespace hairnet {

/// Worker count used by parallel_for. 1 means everything runs inline.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once and
/// writes only its own outputs, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hairnet

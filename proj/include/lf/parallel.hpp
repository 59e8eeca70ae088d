#pragma once

#include <cstddef>
#include <functional>

namespace lf {

/// Worker count used when a call does not pass one explicitly.
int default_jobs();
void set_default_jobs(int jobs);

/// Runs fn(i) for i in [0, n). Each i writes only its own slot, so results
/// do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int jobs = 0);

}  // namespace lf

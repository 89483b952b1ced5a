#pragma once

#include <cstddef>
#include <functional>

namespace manifoldshap {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Callers write results by index, so output never depends on
/// the worker count. If any call throws, the exception from the lowest
/// failing index is rethrown after all workers stop.
void ParallelFor(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Worker count used when a caller passes 0; settable from the CLI.
std::size_t DefaultThreads();
void SetDefaultThreads(std::size_t threads);

}  // namespace manifoldshap

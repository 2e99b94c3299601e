#pragma once

#include <cstddef>
#include <functional>

namespace retarda {

/// Worker count: the RETARDA_THREADS environment variable when set (min 1),
/// otherwise the hardware concurrency.
std::size_t worker_count();

/// Run fn(0) .. fn(count-1) across the worker pool. Work is partitioned
/// statically by index; results must be written to per-index slots so the
/// outcome is schedule-independent. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace retarda

#pragma once

#include <cstddef>
#include <functional>

namespace netcap {

// NETCAP_WORKERS if set and positive, else hardware concurrency (at least 1).
std::size_t default_worker_count();

// Splits [0, count) into contiguous chunks, one per worker; body(begin, end)
// runs on its own thread per chunk. The first exception thrown is rethrown
// after all workers join. workers == 0 means default_worker_count().
void parallel_chunks(std::size_t count, std::size_t workers,
                     const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace netcap

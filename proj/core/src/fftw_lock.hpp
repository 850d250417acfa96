#pragma once

#include <mutex>

namespace semitrotter::detail {

// FFTW planners are not thread-safe; every plan create/destroy of one
// precision goes through its lock.
std::mutex& fftw_planner_mutex();
std::mutex& fftwl_planner_mutex();

}  // namespace semitrotter::detail

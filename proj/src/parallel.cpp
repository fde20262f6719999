#include "rdq/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rdq {

namespace {
int g_cap = 0;
}

void set_thread_cap(int n) {
  g_cap = n > 0 ? n : 0;
#ifdef _OPENMP
  if (g_cap > 0) omp_set_num_threads(g_cap);
#endif
}

int thread_cap() {
#ifdef _OPENMP
  return g_cap > 0 ? g_cap : omp_get_max_threads();
#else
  return 1;
#endif
}

double reduce_max(std::size_t count, const std::function<double(std::size_t)>& f, Exec exec) {
  double best = 0.0;
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < count; ++i) best = std::max(best, f(i));
    return best;
  }
  std::exception_ptr err;
  std::mutex mtx;
#pragma omp parallel for reduction(max : best) schedule(dynamic, 64)
  for (long long i = 0; i < static_cast<long long>(count); ++i) {
    try {
      best = std::max(best, f(static_cast<std::size_t>(i)));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mtx);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return best;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, Exec exec) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mtx;
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(count); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mtx);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace rdq

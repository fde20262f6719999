#pragma once

#include <cstddef>
#include <functional>

namespace rdq {

// Serial variants are the reference implementations kept for testing the OpenMP kernels.
enum class Exec { Serial, Parallel };

void set_thread_cap(int n);
int thread_cap();

// Max of f(i) over i in [0, count).
double reduce_max(std::size_t count, const std::function<double(std::size_t)>& f, Exec exec);

// Runs body(i) for i in [0, count); iterations must write disjoint outputs.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, Exec exec);

}  // namespace rdq

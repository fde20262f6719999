// Serial vs OpenMP timings for the quadrature kernels and one end-to-end integral.
// Usage: bench_kernels [repeats]

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "rdq/oscint.hpp"

using namespace rdq;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = INFINITY;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void row(const std::string& name, double serial, double parallel, double diff) {
  std::printf("%-28s %10.4f %10.4f %8.2f %10.2e\n", name.c_str(), serial, parallel, serial / parallel, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads %d, best of %d\n", omp_get_max_threads(), repeats);
  std::printf("%-28s %10s %10s %8s %10s\n", "kernel", "serial_s", "parallel_s", "speedup", "max_diff");

  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (double R : {20.0, 40.0}) {
    const auto axis = composite_rule(R, auto_panels(R, R, 16), 16);
    const std::vector<AxisRule> axes{axis};
    const int N = static_cast<int>(axis.nodes.size()), K = 4, d = 2;
    std::vector<cplx> U(static_cast<std::size_t>(N) * K), Vt(static_cast<std::size_t>(N) * K * d);
    for (auto& z : U) z = {nd(rng), nd(rng)};
    for (auto& z : Vt) z = {nd(rng), nd(rng)};
    std::vector<cplx> s, p;
    const double ts = best_of(repeats, [&] { s = kernels::separable_sum(axes, axes, U, Vt, K, d, Exec::Serial); });
    const double tp = best_of(repeats, [&] { p = kernels::separable_sum(axes, axes, U, Vt, K, d, Exec::Parallel); });
    row("separable_sum R=" + std::to_string(int(R)) + " N=" + std::to_string(N), ts, tp, max_diff(s, p));

    const kernels::PointFn g = [](std::span<const double> q, std::span<cplx> out) {
      const double e = std::exp(-q[0] * q[0] - q[1] * q[1]);
      out[0] = e * (1.0 + q[0] * q[1]);
      out[1] = e * std::cos(q[0]);
    };
    const double gs = best_of(repeats, [&] { s = kernels::generic_sum(axes, axes, g, 2, Exec::Serial); });
    const double gp = best_of(repeats, [&] { p = kernels::generic_sum(axes, axes, g, 2, Exec::Parallel); });
    row("generic_sum R=" + std::to_string(int(R)) + " N=" + std::to_string(N), gs, gp, max_diff(s, p));
  }

  const auto F = symbol_from_expr("exp(-x1^2)/(1+p1^2)", expr::VarLayout{1, true}, -2.0, 1.0);
  QuadraturePlan serial, parallel;
  serial.exec = Exec::Serial;
  parallel.exec = Exec::Parallel;
  IntegralResult a, b;
  const double is = best_of(repeats, [&] { a = oscillatory_integral(F, serial); });
  const double ip = best_of(repeats, [&] { b = oscillatory_integral(F, parallel); });
  row("oscillatory_integral R=40", is, ip, max_diff(a.value, b.value));
  return 0;
}

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "rdq/jets.hpp"
#include "rdq/parallel.hpp"
#include "rdq/symbols.hpp"

namespace rdq {

// Compactly supported flow on R^n. In one dimension tau_x is the time-x flow of the vector field
// L below; it fixes every |y| >= 1. In n dimensions
//   tau_x(y)_j = tau1_{x_j chi(y_1)...chi(y_n)}(y_j)
// with chi = 1 on [-1, 1] and supported in [-1-eps, 1+eps].
struct CompactTau {
  int n = 1;
  double eps = 0.25;
  double ode_tol = 1e-10;
  // Use tau_x(y) = e^{-1}(e(y) + x), e(y) = exp(1/(1-y)), where the trajectory stays in a tail
  // |y| > 1/2. Off: integrate the ODE all the way.
  bool closed_form_tail = true;

  void validate() const;
};

// L(y) = (1-y)^2 e^{-1/(1-y)} on [1/2, 1), L0 = (9/16) e^{-2} near 0, smoothstep blend on [3/8, 1/2],
// extended evenly and by zero outside (-1, 1).
double tau_field(double y);
Jet tau_field(const Jet& y);
double tau_chi(double y, double eps);
Jet tau_chi(const Jet& y, double eps);

double tau1(double x, double y, const CompactTau& t);
std::vector<double> tau_n(const std::vector<double>& x, const std::vector<double>& y, const CompactTau& t);
// d_x^k d_y^l tau1_x(y), k + l <= 6.
double tau_partials(int k, int l, double x, double y, const CompactTau& t);
// Taylor table c[k][l] = d_x^k d_y^l tau1_x(y) / (k! l!) for k, l <= order.
std::vector<std::vector<double>> tau_taylor(double x, double y, int order, const CompactTau& t);
// tau1_s(y) for jets s and y sharing a layout.
Jet tau1_on_jets(const Jet& s, const Jet& y, const CompactTau& t);
std::vector<Jet> tau_n_on_jets(std::span<const Jet> x, std::span<const Jet> y, const CompactTau& t);

struct GrowthEntry {
  int k = 0, l = 0;
  double fitted_exponent = 0.0;
  double target_exponent = 0.0;
  double residual = 0.0;
  double x_min = 0.0, x_max = 0.0;
  std::vector<double> sups;  // sup_y |d_x^k d_y^l tau_x(y)| per x magnitude
};

// Least-squares slope of log sup_y |d_x^k d_y^l tau_x(y)| against log sqrt(1 + x^2). The sup over
// y_grid is refined locally around the largest sample.
GrowthEntry growth_exponent_fit(int k, int l, const std::vector<double>& xs, const std::vector<double>& y_grid,
                                const CompactTau& t, Exec exec = Exec::Parallel);
// Default grid: uniform in (-1, 1) plus points clustered at both ends.
std::vector<double> default_growth_grid(int count = 801);
// Default x magnitudes: `count` log-spaced values in [lo, hi].
std::vector<double> log_spaced(double lo, double hi, int count);
std::string growth_csv(const std::vector<GrowthEntry>& rows);

struct TranslationAction {};
struct PhaseAction {
  std::vector<double> B;  // n x n row-major; (beta_x f)(y) = e^{i (x, B y)} f(y)
};
struct CompactAction {
  CompactTau tau;
};

struct ActionSpec {
  int n = 1;
  std::variant<TranslationAction, PhaseAction, CompactAction> variant;

  static ActionSpec translation(int n);
  static ActionSpec phase(int n, std::vector<double> B);
  static ActionSpec compact(CompactTau t);
  void validate() const;
  std::string name() const;
};

// The pulled-back symbol alpha_x(f).
SymbolFn act(const ActionSpec& spec, const std::vector<double>& x, const SymbolFn& f);

// p -> (alpha_{A p} f)(y) as a symbol on R^m, where A is n x m (row-major). Used as the left factor
// of deformed products.
SymbolFn orbit_symbol(const ActionSpec& spec, const SymbolFn& f, const std::vector<double>& y,
                      const std::vector<double>& A, int m);

// Order of x -> alpha_x(f) on each base seminorm q and derivative order k <= max_order, keyed
// "<q>,<k>". Translation: |m(q) - rho(q) k|; Phase: k; Compact: b_1 + ... + b_k with b_l = 2l + 1.
// The type is 0 throughout.
OrderProfile action_order_profile(const ActionSpec& spec, const OrderProfile& base, int max_order);

}  // namespace rdq

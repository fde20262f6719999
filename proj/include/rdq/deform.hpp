#pragma once

#include <string>
#include <vector>

#include "rdq/actions.hpp"
#include "rdq/oscint.hpp"
#include "rdq/symbols.hpp"

namespace rdq {

struct DeformationParams {
  int n = 1;
  std::vector<double> theta{0.0};  // n x n row-major
  Pairing pairing = Pairing::identity(1);
  QuadraturePlan plan;
  // Plan for inner integrals of nested evaluations (deformed_symbol). Gaussian-type data need far
  // less radius than order-0 data, and the outer refinement already doubles every inner call.
  QuadraturePlan inner = default_inner_plan();

  static DeformationParams scalar(double theta, QuadraturePlan plan = {});
  static DeformationParams matrix(int n, std::vector<double> theta, QuadraturePlan plan = {});
  static QuadraturePlan default_inner_plan();
  bool skew() const;
  void validate() const;
};

// mu(v, w) covariant for (left, right) with target action `target`:
//   target_x mu(v, w) = mu(left_x v, right_x w).
struct CovariantBilinear {
  ActionSpec left = ActionSpec::translation(1);
  ActionSpec right = ActionSpec::translation(1);
  ActionSpec target = ActionSpec::translation(1);
  BilinearPairing mu = BilinearPairing::scalar();

  static CovariantBilinear pointwise(int n);
};

// Largest |target_x mu(v, w)(z) - mu(left_x v, right_x w)(z)| over the samples.
double covariance_residual(const CovariantBilinear& cb, const SymbolFn& v, const SymbolFn& w,
                           const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& zs);

// (p, y) -> u(p) v(y) on R^{2n} with its separable form attached; u scalar.
SymbolFn separable_symbol(const SymbolFn& u, const SymbolFn& v);
// (p, z) -> (alpha_{A p} f)(z) on R^{m+n}; A is n x m.
SymbolFn joint_orbit(const ActionSpec& spec, const SymbolFn& f, const std::vector<double>& A, int m);
// F(p, z0) as a symbol in p.
SymbolFn restrict_tail(const SymbolFn& F, const std::vector<double>& z0);
// Complex conjugate symbol.
SymbolFn conjugate_symbol(const SymbolFn& f);

// mu_theta(v, w)(x) = I over (p, y) of mu((left_{theta p} v)(x), (right_y w)(x)).
IntegralResult deform_bilinear(const CovariantBilinear& cb, const DeformationParams& params, const SymbolFn& v,
                               const SymbolFn& w, const std::vector<double>& x);

enum class MoyalMethod { Oscillatory, Direct, Cutoff };

// (f x_theta g)(x) = (2 pi)^{-n} int dp dy e^{i<p, y>} f(x + theta p) g(x + y).
// Direct is absolutely convergent only for invertible theta and Schwartz data; Cutoff takes the
// limit of the product-cutoff integrals along a fixed schedule.
IntegralResult moyal_product(const SymbolFn& f, const SymbolFn& g, const DeformationParams& params,
                             const std::vector<double>& x, MoyalMethod method = MoyalMethod::Oscillatory);

// n = 1: sum_{m <= terms} (i theta)^m / m! f^(m)(x) g^(m)(x).
cplx moyal_series(const SymbolFn& f, const SymbolFn& g, double theta, double x, int terms = 20);

struct PlainResult {
  cplx value;
  double err = 0.0;
};
// (f *_theta g)(x) = int dy e^{i<x, theta y>} f(y) g(x - y) by nested adaptive Gauss-Kronrod.
PlainResult twisted_convolution(const SymbolFn& f, const SymbolFn& g, const std::vector<double>& theta,
                                const std::vector<double>& x, double tol = 1e-12);

// z -> mu_theta(v, w)(z) as a scalar symbol on R^n. Jets come from one vector-valued inner
// integral over the Taylor coefficients in z, so this can feed another deformation.
SymbolFn deformed_symbol(const CovariantBilinear& cb, const DeformationParams& params, const SymbolFn& v,
                         const SymbolFn& w);

// (mu_theta)_theta'(f, g)(x) as one 4n-dimensional oscillatory integral over (p, p') x (y, y') of
// f(x + theta' p + theta p') g(x + y + y').
IntegralResult iterated_moyal(const SymbolFn& f, const SymbolFn& g, const std::vector<double>& theta,
                              const std::vector<double>& theta_prime, int n, const std::vector<double>& x,
                              const QuadraturePlan& plan);

// f(tau_{theta p}(y)) g(tau_x(y)) integrated over (p, x).
IntegralResult local_nc_product(const SymbolFn& f, const SymbolFn& g, const CompactTau& tau,
                                const std::vector<double>& theta, const std::vector<double>& y,
                                const QuadraturePlan& plan = {});

struct PropertyEntry {
  std::string identity;
  std::string instance;
  std::vector<double> point;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct PropertyReport {
  std::vector<PropertyEntry> entries;

  void add(std::string identity, std::string instance, std::vector<double> point, double residual,
           double tolerance);
  bool all_pass() const;
  std::string to_jsonl() const;
  std::string to_csv() const;
};

// Both sides of (a x_theta b)_theta psi = a_theta (b_theta psi) with pointwise products and the
// given actions on the algebra (alpha) and on the module (beta).
PropertyEntry module_deform(const ActionSpec& alpha, const ActionSpec& beta, const DeformationParams& params,
                            const SymbolFn& a, const SymbolFn& b, const SymbolFn& psi, const std::vector<double>& x,
                            double tol);

struct SuiteConfig {
  int n = 1;
  std::vector<double> thetas{0.1, 0.2};
  std::vector<double> points{-1.0, 0.0, 1.0};
  // Empty: all of theta-zero, theta-additivity, associativity, module, identity, star, covariance,
  // semiclassical.
  std::vector<std::string> identities;
  // Expressions in x1..xn for the triple (f, g, h); empty: a built-in Gaussian battery.
  std::string f, g, h;
  QuadraturePlan plan = default_suite_plan();

  static QuadraturePlan default_suite_plan();
};

PropertyReport property_suite(const SuiteConfig& config);

}  // namespace rdq

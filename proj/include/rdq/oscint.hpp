#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdq/parallel.hpp"
#include "rdq/qs.hpp"
#include "rdq/symbols.hpp"

namespace rdq {

// <p, x> = (p, M x) with |det M| = 1.
struct Pairing {
  int n = 1;
  std::vector<double> M;  // row-major; empty means identity

  static Pairing identity(int n);
  static Pairing matrix(int n, std::vector<double> M);
  bool is_identity() const;
  std::vector<double> dense() const;
  void validate() const;
};

struct QuadraturePlan {
  enum class Refinement { None, DoubleAndCompare };
  std::optional<int> s;           // empty: select_s from the profile
  double radius = 40.0;           // truncation of the p block (and x block unless radius_x > 0)
  double radius_x = 0.0;
  int panels = 0;                 // per axis; 0: four oscillation periods per panel
  int rule_order = 16;
  Refinement refinement = Refinement::DoubleAndCompare;
  double tol = INFINITY;          // largest acceptable error estimate
  int max_refinements = 1;
  Exec exec = Exec::Parallel;

  double rx() const { return radius_x > 0.0 ? radius_x : radius; }
  void validate() const;
};

struct IntegralResult {
  std::vector<cplx> value;
  std::vector<double> err;
  int s = 0;
  double radius = 0.0;
  int panels = 0;

  std::string to_json() const;
};

// Composite Gauss-Legendre rule on [-R, R].
struct AxisRule {
  std::vector<double> nodes, weights;
};
AxisRule gauss_legendre(int order);
AxisRule composite_rule(double radius, int panels, int order);
int auto_panels(double radius, double conjugate_radius, int order);

// G(p, x) = Q_s^T [F / (P^s(p) P^s(x))] for the given pairing.
PlainEvaluator regularize(const SymbolFn& F, int s, const Pairing& pairing = Pairing::identity(1));

int select_s(int n, const OrderProfile& profile);

// (2 pi)^{-n} int e^{i<p,x>} F(p, x) dp dx for F on R^{2n} with coordinates (p, x).
IntegralResult oscillatory_integral(const SymbolFn& F, const QuadraturePlan& plan,
                                    const Pairing& pairing = Pairing::identity(1));

// Plain truncated quadrature without regularization; valid for integrands decaying in both blocks.
IntegralResult direct_integral(const SymbolFn& F, const QuadraturePlan& plan,
                               const Pairing& pairing = Pairing::identity(1));

// Limit of I_0(chi(eps(p-p0), eps(x-x0)) F) along the schedule, extrapolated from the last three values.
IntegralResult cutoff_limit_integral(const SymbolFn& F, const std::vector<double>& schedule,
                                     const std::vector<double>& p0, const std::vector<double>& x0,
                                     const Pairing& pairing = Pairing::identity(1), int rule_order = 16,
                                     Exec exec = Exec::Parallel);

// Raw kernels over precomputed tables, exposed for testing and benchmarking.
namespace kernels {

// out_c = sum_i wp_i sum_k U[i][k] sum_j wx_j e^{i p_i . x_j} Vt[j][k][c]; U is (Np x K), Vt is
// (Nx x K x d). Grids are tensor products of the 1-D axes (n axes each, first axis slowest).
// If abs_sum is given it receives sum_k (sum_i wp_i |U[i][k]|)(sum_j wx_j |Vt[j][k][c]|), a bound on
// the magnitudes the sum passes through.
std::vector<cplx> separable_sum(const std::vector<AxisRule>& p_axes, const std::vector<AxisRule>& x_axes,
                                const std::vector<cplx>& U, const std::vector<cplx>& Vt, int K, int d, Exec exec,
                                std::vector<double>* abs_sum = nullptr);

// out_c = sum_i sum_j wp_i wx_j e^{i p_i . x_j} g(p_i, x_j)_c with g called on the point (p, x).
using PointFn = std::function<void(std::span<const double>, std::span<cplx>)>;
// abs_sum, if given, receives sum_i sum_j wp_i wx_j |g(p_i, x_j)_c|.
std::vector<cplx> generic_sum(const std::vector<AxisRule>& p_axes, const std::vector<AxisRule>& x_axes,
                              const PointFn& g, int d, Exec exec, std::vector<double>* abs_sum = nullptr);

}  // namespace kernels

struct IdentityCheck {
  std::string identity;
  std::string instance;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Normalization, affine substitution, integration by parts, conjugation and Fubini on a Gaussian battery.
std::vector<IdentityCheck> verify_identities(const Pairing& pairing, double tolerance,
                                             const QuadraturePlan& plan = {});

}  // namespace rdq

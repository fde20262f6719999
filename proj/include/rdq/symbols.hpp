#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rdq/expr.hpp"
#include "rdq/jets.hpp"
#include "rdq/parallel.hpp"

namespace rdq {

// q_w(v) = max_j w_j |v_j|
struct Seminorm {
  std::string name;
  std::vector<double> weights;
  double operator()(std::span<const cplx> v) const;
};

struct SeminormSystem {
  std::vector<Seminorm> entries;

  static SeminormSystem max_abs(int d, const std::string& name = "max");
  const Seminorm& find(const std::string& name) const;
  bool contains(const std::string& name) const;
  void validate(int d) const;
};

struct OrderProfile {
  // seminorm name -> (order m, type rho); order may be -infinity for Schwartz-class data.
  std::map<std::string, std::pair<double, double>> entries;

  static OrderProfile uniform(const SeminormSystem& sys, double m, double rho);
  static OrderProfile schwartz(const SeminormSystem& sys);
  double m(const std::string& q) const;
  double rho(const std::string& q) const;
  bool admissible() const;
  bool covers(const SeminormSystem& sys) const;
  // Pointwise comparison m <= other.m over shared names.
  bool order_leq(const OrderProfile& other) const;
};

using JetEvaluator = std::function<std::vector<Jet>(std::span<const Jet>)>;
using PlainEvaluator = std::function<void(std::span<const double>, std::span<cplx>)>;

struct SeparableForm;

// Smooth R^k -> C^d with a declared order/type profile.
struct SymbolFn {
  int k = 1;
  int d = 1;
  JetEvaluator jets;
  PlainEvaluator plain;  // optional fast path; must agree with the jet constant term
  SeminormSystem system;
  OrderProfile profile;
  // Optional split F(p, x) = sum_r u_r(p) v_r(x) for symbols on R^{2n}.
  std::shared_ptr<const SeparableForm> separable;

  bool admissible() const { return profile.admissible(); }
  std::vector<Jet> eval_jet(const std::vector<double>& point, const std::vector<int>& orders) const;
  std::vector<cplx> eval(std::span<const double> point) const;
  void eval_into(std::span<const double> point, std::span<cplx> out) const;
  std::vector<Jet> on_jets(std::span<const Jet> inputs) const;
};

struct SeparableTerm {
  SymbolFn u;  // scalar, depends on p
  SymbolFn v;  // C^d, depends on x
};

struct SeparableForm {
  int n = 1;
  std::vector<SeparableTerm> terms;
};

struct GridSpec {
  enum class Spacing { Uniform, Tanh };
  std::vector<int> counts{129};
  double radius = 10.0;
  Spacing spacing = Spacing::Uniform;

  static GridSpec uniform(int k, int count = 129, double radius = 10.0);
  std::vector<double> axis(int a) const;
  std::size_t total() const;
  void point(std::size_t flat, std::vector<double>& out) const;
};

// ---- builders -------------------------------------------------------------

SymbolFn symbol_from_expr(const expr::Expr& e, const expr::VarLayout& lay, double m = 0.0, double rho = 0.0);
SymbolFn symbol_from_expr(const std::string& text, const expr::VarLayout& lay, double m = 0.0,
                          double rho = 0.0);
SymbolFn symbol_from_exprs(const std::vector<expr::Expr>& es, const expr::VarLayout& lay,
                           const SeminormSystem& sys, const OrderProfile& prof);
SymbolFn constant_symbol(int k, std::vector<cplx> value);
// Schwartz-class symbol: order -infinity on every seminorm.
SymbolFn with_profile(SymbolFn f, OrderProfile prof);
SymbolFn with_schwartz_profile(SymbolFn f);

// ---- estimates ------------------------------------------------------------

double seminorm_estimate(const SymbolFn& F, const std::string& q, const MultiIndex& mu, double m, double rho,
                         const GridSpec& grid, Exec exec = Exec::Parallel);

struct SymbolCheckEntry {
  std::string seminorm;
  MultiIndex mu;
  double m = 0.0;
  double rho = 0.0;
  double estimate = 0.0;
  bool diverging = false;
};

// Growth exponent above which the boundary shell is treated as still increasing.
inline constexpr double kGrowthFlagExponent = 0.1;

std::vector<SymbolCheckEntry> check_symbol(const SymbolFn& F, int L, const GridSpec& grid,
                                           Exec exec = Exec::Parallel);
std::string to_jsonl(const std::vector<SymbolCheckEntry>& report);

struct SchwartzEstimate {
  double estimate = 0.0;
  bool diverging = false;
};
SchwartzEstimate schwartz_seminorm(const SymbolFn& F, int m, const MultiIndex& mu, const GridSpec& grid,
                                   const std::string& q = "", Exec exec = Exec::Parallel);
// Runs schwartz_seminorm for m <= M, |mu| <= L; true when nothing diverges.
bool schwartz_certified(const SymbolFn& F, int M, int L, const GridSpec& grid);

// ---- calculus -------------------------------------------------------------

SymbolFn differentiate(const SymbolFn& F, const MultiIndex& nu);

// out_k = sum_ij c[k][i][j] v_i w_j
struct BilinearPairing {
  int d1 = 1, d2 = 1, d3 = 1;
  std::vector<cplx> c;  // size d3*d1*d2, index (k*d1 + i)*d2 + j
  SeminormSystem target;

  static BilinearPairing scalar();
  cplx coeff(int k, int i, int j) const { return c[(k * d1 + i) * d2 + j]; }
  // Smallest c with r(mu(v,w)) <= c q(v) q'(w) for the given weighted max seminorms.
  double continuity_constant(const Seminorm& r, const Seminorm& q, const Seminorm& qp) const;
};

SymbolFn pointwise_product(const SymbolFn& F, const SymbolFn& G, const BilinearPairing& mu = BilinearPairing::scalar());
SymbolFn outer_product(const SymbolFn& F, const SymbolFn& G, const BilinearPairing& mu = BilinearPairing::scalar());

struct LinearMapSpec {
  std::vector<cplx> A;  // rows = target dim, cols = source dim, row-major
  int rows = 1, cols = 1;
  SeminormSystem target;
  OrderProfile target_profile;
  // target seminorm name -> source seminorm name
  std::map<std::string, std::string> source_of;
  // Smallest c with q'(Av) <= c q(v).
  double constant(const Seminorm& qp, const Seminorm& q) const;
};
SymbolFn apply_linear(const LinearMapSpec& A, const SymbolFn& F);

SymbolFn scalar_power(const SymbolFn& f, cplx alpha);

// chi(x) = b(2-|x|) / (b(2-|x|) + b(|x|-1)), b(u) = exp(-1/u) for u > 0.
double bump(double r);
// chi evaluated on a jet of r^2 = |x|^2, with transition band [r_in, r_out].
Jet bump_on_square(const Jet& r2, double r_in = 1.0, double r_out = 2.0);
SymbolFn cutoff_mollify(const SymbolFn& F, double eps, const std::vector<double>& shift);
double cutoff_support_radius(double eps, const std::vector<double>& shift);

SymbolFn translate_pullback(const SymbolFn& F, const std::vector<double>& y);
SymbolFn gl_pullback(const SymbolFn& F, const std::vector<double>& A);  // k x k row-major

struct CurriedSymbol {
  int k1 = 0, k2 = 0;
  std::function<SymbolFn(const std::vector<double>&)> slice;
  OrderProfile induced;  // per base seminorm q: (max{0, m(q)}, rho(q))
};
CurriedSymbol curry(const SymbolFn& F, int k1);

// Grid estimate of the curried seminorm ||F_1||_{||.||_{q,mu}, nu} (left side of the slice bound).
double curried_seminorm_estimate(const CurriedSymbol& C, const SymbolFn& F, const std::string& q,
                                 const MultiIndex& nu, const MultiIndex& mu, const GridSpec& g1,
                                 const GridSpec& g2);

}  // namespace rdq

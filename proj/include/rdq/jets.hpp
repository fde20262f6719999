#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace rdq {

using cplx = std::complex<double>;
using MultiIndex = std::vector<int>;

int order_of(const MultiIndex& mu);
bool index_leq(const MultiIndex& a, const MultiIndex& b);
double factorial(int k);
double multi_factorial(const MultiIndex& mu);

// Dense box of multi-indices 0 <= mu <= orders, stored row-major (last axis fastest).
// Layouts are interned, so two jets with equal orders share one Layout object.
class JetLayout {
 public:
  static std::shared_ptr<const JetLayout> get(const std::vector<int>& orders);

  int dim() const { return static_cast<int>(orders_.size()); }
  int size() const { return size_; }
  const std::vector<int>& orders() const { return orders_; }
  const std::vector<int>& strides() const { return strides_; }
  // Largest total degree present in the box.
  int max_degree() const { return max_degree_; }
  int degree(int idx) const { return degree_[idx]; }
  int index(const MultiIndex& mu) const;
  MultiIndex multi(int idx) const;
  // Triples (i <= j, k) with multi(i) + multi(j) = multi(k) inside the box.
  struct Triple {
    std::int32_t i, j, k;
  };
  const std::vector<Triple>& products() const { return products_; }

  explicit JetLayout(std::vector<int> orders);

 private:
  std::vector<int> orders_;
  std::vector<int> strides_;
  std::vector<int> degree_;
  std::vector<Triple> products_;
  int size_ = 1;
  int max_degree_ = 0;
};

using LayoutPtr = std::shared_ptr<const JetLayout>;
using CenterPtr = std::shared_ptr<const std::vector<double>>;

enum class Elementary { Exp, Sin, Cos, Reciprocal, Power, Log };

// Truncated multivariate Taylor table: coefficient(mu) = d^mu f(center) / mu!.
class Jet {
 public:
  Jet() = default;
  Jet(LayoutPtr layout, CenterPtr center);
  Jet(LayoutPtr layout, CenterPtr center, std::vector<cplx> coeffs);

  static Jet constant(LayoutPtr layout, CenterPtr center, cplx value);
  // Constant jet sharing layout and center with `like`.
  static Jet constant_like(const Jet& like, cplx value);

  const JetLayout& layout() const { return *layout_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  const CenterPtr& center_ptr() const { return center_; }
  const std::vector<double>& center() const { return *center_; }
  std::span<const cplx> coeffs() const { return c_; }
  std::span<cplx> coeffs() { return c_; }
  cplx value() const { return c_[0]; }
  cplx coeff(const MultiIndex& mu) const;
  int size() const { return static_cast<int>(c_.size()); }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(cplx s);
  Jet& operator+=(cplx s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, cplx s) { return a *= s; }
  friend Jet operator*(cplx s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, cplx s) { return a += s; }
  friend Jet operator-(Jet a, cplx s) { return a += -s; }
  Jet operator-() const;

  void check_compatible(const Jet& o) const;

 private:
  LayoutPtr layout_;
  CenterPtr center_;
  std::vector<cplx> c_;
};

Jet jet_var(int axis, const std::vector<double>& center, const std::vector<int>& orders);
// Coordinate jets for every axis, sharing one layout and center.
std::vector<Jet> jet_vars(const std::vector<double>& center, const std::vector<int>& orders);

Jet jet_mul(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet jet_div(const Jet& a, const Jet& b);
// f(a) for an elementary f; `alpha` is the exponent for Power.
Jet jet_apply_unary(Elementary f, const Jet& a, cplx alpha = 0.0);
Jet jet_pow_int(const Jet& a, int k);
cplx extract_partial(const Jet& a, const MultiIndex& mu);

// Taylor coefficients f^(j)(a0)/j!, j = 0..degree.
std::vector<cplx> elementary_series(Elementary f, cplx a0, int degree, cplx alpha = 0.0);
// Sum_j series[j] * (a - a0)^j, truncated to a's layout.
Jet compose_series(const std::vector<cplx>& series, const Jet& a);

// Evaluate an "own" jet g (Taylor table at u0 in k variables, per-axis orders >= the
// total degree of h's layout) on h = u - u0: returns sum_c g_c prod_i h_i^{c_i}.
Jet compose_multi(std::span<const cplx> own, const JetLayout& own_layout,
                  std::span<const Jet> h);

// True when inputs are exactly the coordinate jets of their shared layout.
bool are_coordinate_jets(std::span<const Jet> inputs);

}  // namespace rdq

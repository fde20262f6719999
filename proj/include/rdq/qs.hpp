#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <string>
#include <vector>

#include "rdq/jets.hpp"

namespace rdq {

using Rational = boost::multiprecision::cpp_rational;

// Element of Q[i].
struct GaussRational {
  Rational re, im;

  GaussRational() = default;
  GaussRational(Rational r, Rational i = 0) : re(std::move(r)), im(std::move(i)) {}
  static GaussRational imag_unit() { return {0, 1}; }

  bool is_zero() const { return re == 0 && im == 0; }
  cplx to_complex() const { return {re.convert_to<double>(), im.convert_to<double>()}; }
  std::string str() const;

  GaussRational& operator+=(const GaussRational& o);
  GaussRational& operator-=(const GaussRational& o);
  friend GaussRational operator+(GaussRational a, const GaussRational& b) { return a += b; }
  friend GaussRational operator-(GaussRational a, const GaussRational& b) { return a -= b; }
  friend GaussRational operator*(const GaussRational& a, const GaussRational& b);
  friend GaussRational operator/(const GaussRational& a, const GaussRational& b);
  GaussRational operator-() const { return {-re, -im}; }
  friend bool operator==(const GaussRational& a, const GaussRational& b) { return a.re == b.re && a.im == b.im; }
};

// Polynomial in (p_1..p_n, x_1..x_n); key = exponent vector of length 2n.
using GaussPoly = std::map<std::vector<int>, GaussRational>;

// D(mu, nu) with d_x^mu d_p^nu e^{i(p,x)} = D(mu, nu)(p, x) e^{i(p,x)}.
GaussPoly phase_derivative_poly(int n, const MultiIndex& mu_x, const MultiIndex& nu_p);
// P^s(x) P^s(p) with P(t) = (i + t_1)...(i + t_n).
GaussPoly ps_product(int n, int s);

// Coefficients a^{mu nu} of Q_s = sum a^{mu nu} d_x^mu d_p^nu (identity pairing unless stated).
struct QsTable {
  int n = 1;
  int s = 0;
  bool transposed = false;
  bool exact = true;                 // identity pairing, values in Q[i]
  std::vector<MultiIndex> mu;        // x-derivative orders
  std::vector<MultiIndex> nu;        // p-derivative orders
  std::vector<GaussRational> a;      // exact values (empty when !exact)
  std::vector<cplx> value;           // double values
  std::vector<double> pairing;       // row-major M, empty for identity

  cplx at(const MultiIndex& mu_x, const MultiIndex& nu_p) const;
};

QsTable qs_coefficients(int n, int s);
// General pairing (p, Mx): least-squares monomial matching in double precision. Orders run over
// the per-coordinate box for diagonal M and over |mu|, |nu| <= sn otherwise.
QsTable qs_coefficients(int n, int s, const std::vector<double>& M);
// Q_s^T: signs (-1)^{|mu|+|nu|}.
QsTable qs_transpose(const QsTable& q);
QsTable qs_transpose_coefficients(int n, int s);

// Exact check that sum a^{mu nu} D(mu,nu) equals P^s(x) P^s(p) (untransposed, exact tables only).
bool qs_certify(const QsTable& q);
GaussPoly qs_apply_to_phase(const QsTable& q);

// Smallest s with m - 2sn - rho k < -2(n+1) for k in {0, 2sn}, over all (m, rho) pairs.
int select_s(int n, const std::vector<std::pair<double, double>>& orders);

}  // namespace rdq

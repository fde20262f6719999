#pragma once

#include <boost/multiprecision/cpp_complex.hpp>
#include <complex>
#include <vector>

#include "rdq/expr.hpp"

namespace rdq::testing {

using mpc = boost::multiprecision::cpp_complex_50;
using mpf = boost::multiprecision::cpp_bin_float_50;

// Independent tree-walking evaluator in 50-digit arithmetic.
inline mpc mp_eval(const expr::Node& n, const std::vector<mpc>& pt, const expr::VarLayout& lay) {
  using K = expr::Node::Kind;
  switch (n.kind) {
    case K::Num:
      return mpc(mpf(n.num));
    case K::Imag:
      return mpc(0, 1);
    case K::Var: {
      const int off = (n.var_kind == 'x' && lay.with_p) ? lay.n : 0;
      return pt.at(off + n.var_index - 1);
    }
    case K::Neg:
      return -mp_eval(*n.kids[0], pt, lay);
    case K::Add:
      return mp_eval(*n.kids[0], pt, lay) + mp_eval(*n.kids[1], pt, lay);
    case K::Sub:
      return mp_eval(*n.kids[0], pt, lay) - mp_eval(*n.kids[1], pt, lay);
    case K::Mul:
      return mp_eval(*n.kids[0], pt, lay) * mp_eval(*n.kids[1], pt, lay);
    case K::Div:
      return mp_eval(*n.kids[0], pt, lay) / mp_eval(*n.kids[1], pt, lay);
    case K::Pow: {
      const mpc b = mp_eval(*n.kids[0], pt, lay);
      if (n.num == std::floor(n.num) && std::abs(n.num) <= 64) {
        int e = static_cast<int>(n.num);
        mpc r(1);
        for (int j = 0; j < std::abs(e); ++j) r *= b;
        return e < 0 ? mpc(1) / r : r;
      }
      return exp(mpc(mpf(n.num)) * log(b));
    }
    case K::Call: {
      if (n.name == "gauss") {
        mpc s(0);
        for (const auto& k : n.kids) {
          const mpc a = mp_eval(*k, pt, lay);
          s += a * a;
        }
        return exp(-s / 2);
      }
      const mpc a = mp_eval(*n.kids[0], pt, lay);
      if (n.name == "exp") return exp(a);
      if (n.name == "sin") return sin(a);
      if (n.name == "cos") return cos(a);
      if (n.name == "sqrt") return exp(log(a) / 2);
      throw std::runtime_error("mp_eval: unknown function");
    }
  }
  throw std::runtime_error("mp_eval: bad node");
}

// Central-difference stencil for the k-th derivative, O(h^2).
inline std::vector<std::pair<int, double>> stencil(int k) {
  switch (k) {
    case 0:
      return {{0, 1.0}};
    case 1:
      return {{1, 0.5}, {-1, -0.5}};
    case 2:
      return {{1, 1.0}, {0, -2.0}, {-1, 1.0}};
    case 3:
      return {{2, 0.5}, {1, -1.0}, {-1, 1.0}, {-2, -0.5}};
    case 4:
      return {{2, 1.0}, {1, -4.0}, {0, 6.0}, {-1, -4.0}, {-2, 1.0}};
  }
  throw std::runtime_error("stencil order too high");
}

// Mixed partial d^mu f at x by tensor-product central differences with step h.
inline std::complex<double> fd_partial(const expr::Expr& e, const std::vector<double>& x, const MultiIndex& mu,
                                       double h, const expr::VarLayout& lay) {
  const int k = static_cast<int>(x.size());
  std::vector<std::vector<std::pair<int, double>>> st;
  for (int a = 0; a < k; ++a) st.push_back(stencil(mu[a]));
  std::vector<int> pos(k, 0);
  mpc acc(0);
  const mpf hh(h);
  while (true) {
    std::vector<mpc> pt(k);
    mpf w(1);
    for (int a = 0; a < k; ++a) {
      pt[a] = mpc(mpf(x[a]) + hh * st[a][pos[a]].first);
      w *= st[a][pos[a]].second;
    }
    acc += mpc(w) * mp_eval(e.root(), pt, lay);
    int a = k - 1;
    while (a >= 0 && ++pos[a] == static_cast<int>(st[a].size())) pos[a--] = 0;
    if (a < 0) break;
  }
  mpf scale = pow(hh, order_of(mu));
  acc /= mpc(scale);
  return {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
}

}  // namespace rdq::testing

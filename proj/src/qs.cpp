#include "rdq/qs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rdq/errors.hpp"

namespace rdq {

std::string GaussRational::str() const {
  std::ostringstream os;
  os << re << (im < 0 ? "-" : "+") << abs(im) << "i";
  return os.str();
}

GaussRational& GaussRational::operator+=(const GaussRational& o) {
  re += o.re;
  im += o.im;
  return *this;
}

GaussRational& GaussRational::operator-=(const GaussRational& o) {
  re -= o.re;
  im -= o.im;
  return *this;
}

GaussRational operator*(const GaussRational& a, const GaussRational& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

GaussRational operator/(const GaussRational& a, const GaussRational& b) {
  const Rational den = b.re * b.re + b.im * b.im;
  if (den == 0) throw DomainError("division by zero in Q[i]");
  return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}

namespace {

template <class C>
using Poly = std::map<std::vector<int>, C>;

template <class C>
bool is_zero(const C& c) {
  if constexpr (std::is_same_v<C, GaussRational>)
    return c.is_zero();
  else
    return c == C(0.0);
}

template <class C>
void add_term(Poly<C>& p, const std::vector<int>& e, const C& c) {
  if (is_zero(c)) return;
  auto [it, fresh] = p.emplace(e, c);
  if (!fresh) {
    it->second += c;
    if (is_zero(it->second)) p.erase(it);
  }
}

template <class C>
Poly<C> derivative(const Poly<C>& p, int var) {
  Poly<C> r;
  for (const auto& [e, c] : p) {
    if (e[var] == 0) continue;
    auto f = e;
    --f[var];
    add_term(r, f, c * C(e[var]));
  }
  return r;
}

// Multiply by i * sum_k coef[k] t_k over the variables offset..offset+n-1.
template <class C>
Poly<C> times_linear(const Poly<C>& p, int offset, const std::vector<C>& coef, const C& iu) {
  Poly<C> r;
  for (const auto& [e, c] : p)
    for (std::size_t k = 0; k < coef.size(); ++k) {
      if (is_zero(coef[k])) continue;
      auto f = e;
      ++f[offset + k];
      add_term(r, f, c * coef[k] * iu);
    }
  return r;
}

template <class C>
Poly<C> add(Poly<C> a, const Poly<C>& b) {
  for (const auto& [e, c] : b) add_term(a, e, c);
  return a;
}

// D(mu, nu) for the phase (p, M x); M row-major n x n.
// d/dx_j phase = i (M^T p)_j, d/dp_k phase = i (M x)_k.
template <class C>
Poly<C> phase_poly(int n, const MultiIndex& mu_x, const MultiIndex& nu_p, const std::vector<C>& M, const C& iu) {
  Poly<C> d;
  d[std::vector<int>(2 * n, 0)] = C(1);
  for (int j = 0; j < n; ++j)
    for (int t = 0; t < mu_x[j]; ++t) {
      std::vector<C> col(n);
      for (int k = 0; k < n; ++k) col[k] = M[k * n + j];
      d = add(derivative(d, n + j), times_linear(d, 0, col, iu));
    }
  for (int k = 0; k < n; ++k)
    for (int t = 0; t < nu_p[k]; ++t) {
      std::vector<C> row(M.begin() + k * n, M.begin() + (k + 1) * n);
      d = add(derivative(d, k), times_linear(d, n, row, iu));
    }
  return d;
}

template <class C>
std::vector<C> identity_matrix(int n) {
  std::vector<C> m(n * n, C(0));
  for (int i = 0; i < n; ++i) m[i * n + i] = C(1);
  return m;
}

std::vector<MultiIndex> box_indices(int n, int s) {
  auto lay = JetLayout::get(std::vector<int>(n, s));
  std::vector<MultiIndex> out;
  for (int i = 0; i < lay->size(); ++i) out.push_back(lay->multi(i));
  return out;
}

// Multi-indices of total degree <= deg.
std::vector<MultiIndex> simplex_indices(int n, int deg) {
  std::vector<MultiIndex> out;
  for (const auto& m : box_indices(n, deg))
    if (order_of(m) <= deg) out.push_back(m);
  return out;
}

std::vector<int> join(const MultiIndex& p, const MultiIndex& x) {
  std::vector<int> e(p);
  e.insert(e.end(), x.begin(), x.end());
  return e;
}

void check_ns(int n, int s) {
  if (n < 1) throw UsageError("dimension must be at least 1");
  if (s < 0) throw UsageError("regularization order must be non-negative");
}

}  // namespace

GaussPoly phase_derivative_poly(int n, const MultiIndex& mu_x, const MultiIndex& nu_p) {
  return phase_poly<GaussRational>(n, mu_x, nu_p, identity_matrix<GaussRational>(n), GaussRational::imag_unit());
}

GaussPoly ps_product(int n, int s) {
  check_ns(n, s);
  GaussPoly r;
  r[std::vector<int>(2 * n, 0)] = GaussRational(1);
  const GaussRational iu = GaussRational::imag_unit();
  for (int v = 0; v < 2 * n; ++v)
    for (int t = 0; t < s; ++t) {
      GaussPoly next;
      for (const auto& [e, c] : r) {
        add_term(next, e, c * iu);
        auto f = e;
        ++f[v];
        add_term(next, f, c);
      }
      r = std::move(next);
    }
  return r;
}

cplx QsTable::at(const MultiIndex& mu_x, const MultiIndex& nu_p) const {
  for (std::size_t k = 0; k < mu.size(); ++k)
    if (mu[k] == mu_x && nu[k] == nu_p) return value[k];
  return 0.0;
}

QsTable qs_coefficients(int n, int s) {
  check_ns(n, s);
  QsTable t;
  t.n = n;
  t.s = s;
  const auto idx = box_indices(n, s);
  const GaussPoly rhs = ps_product(n, s);

  // D(mu,nu) = i^{|mu|+|nu|} p^mu x^nu + terms strictly lower in both blocks, so unknowns are
  // solved from the highest monomial down.
  struct Unknown {
    MultiIndex mu, nu;
    GaussPoly d;
    int degree;
  };
  std::vector<Unknown> us;
  for (const auto& m : idx)
    for (const auto& v : idx) us.push_back({m, v, phase_derivative_poly(n, m, v), order_of(m) + order_of(v)});
  std::stable_sort(us.begin(), us.end(), [](const Unknown& a, const Unknown& b) { return a.degree > b.degree; });

  std::vector<GaussRational> sol(us.size());
  for (std::size_t u = 0; u < us.size(); ++u) {
    const auto lead = join(us[u].mu, us[u].nu);
    GaussRational acc;
    if (auto it = rhs.find(lead); it != rhs.end()) acc = it->second;
    for (std::size_t w = 0; w < u; ++w) {
      if (sol[w].is_zero()) continue;
      if (auto it = us[w].d.find(lead); it != us[w].d.end()) acc -= sol[w] * it->second;
    }
    sol[u] = acc / us[u].d.at(lead);
  }
  for (std::size_t u = 0; u < us.size(); ++u) {
    if (sol[u].is_zero()) continue;
    t.mu.push_back(us[u].mu);
    t.nu.push_back(us[u].nu);
    t.a.push_back(sol[u]);
    t.value.push_back(sol[u].to_complex());
  }
  return t;
}

QsTable qs_coefficients(int n, int s, const std::vector<double>& M) {
  check_ns(n, s);
  if (static_cast<int>(M.size()) != n * n) throw UsageError("pairing matrix has wrong size");
  std::vector<cplx> Mc(M.begin(), M.end());
  // A non-diagonal M mixes coordinates, so per-coordinate degree s is not enough; total degree sn is.
  bool diagonal = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && M[i * n + j] != 0.0) diagonal = false;
  const auto idx = diagonal ? box_indices(n, s) : simplex_indices(n, s * n);
  std::vector<std::pair<MultiIndex, MultiIndex>> cols;
  std::vector<Poly<cplx>> polys;
  for (const auto& m : idx)
    for (const auto& v : idx) {
      cols.push_back({m, v});
      polys.push_back(phase_poly<cplx>(n, m, v, Mc, cplx(0, 1)));
    }
  Poly<cplx> rhs;
  for (const auto& [e, c] : ps_product(n, s)) rhs[e] = c.to_complex();
  std::map<std::vector<int>, int> rows;
  for (const auto& p : polys)
    for (const auto& [e, c] : p) rows.emplace(e, 0);
  for (const auto& [e, c] : rhs) rows.emplace(e, 0);
  int r = 0;
  for (auto& [e, k] : rows) k = r++;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(r, static_cast<int>(cols.size()));
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(r);
  for (std::size_t c = 0; c < polys.size(); ++c)
    for (const auto& [e, v] : polys[c]) A(rows[e], static_cast<int>(c)) = v;
  for (const auto& [e, v] : rhs) b(rows[e]) = v;
  Eigen::VectorXcd x = A.colPivHouseholderQr().solve(b);
  const double res = (A * x - b).norm();
  if (!(res <= 1e-9 * std::max(1.0, b.norm()))) {
    std::ostringstream os;
    os << "Q_s system for this pairing is not solvable: residual " << res << " (n=" << n << ", s=" << s << ")";
    throw DomainError(os.str());
  }
  QsTable t;
  t.n = n;
  t.s = s;
  t.exact = false;
  t.pairing = M;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (std::abs(x(c)) < 1e-13) continue;
    t.mu.push_back(cols[c].first);
    t.nu.push_back(cols[c].second);
    t.value.push_back(x(c));
  }
  return t;
}

QsTable qs_transpose(const QsTable& q) {
  QsTable t = q;
  t.transposed = !q.transposed;
  for (std::size_t k = 0; k < t.mu.size(); ++k) {
    if ((order_of(t.mu[k]) + order_of(t.nu[k])) % 2 == 0) continue;
    t.value[k] = -t.value[k];
    if (t.exact) t.a[k] = -t.a[k];
  }
  return t;
}

QsTable qs_transpose_coefficients(int n, int s) { return qs_transpose(qs_coefficients(n, s)); }

GaussPoly qs_apply_to_phase(const QsTable& q) {
  if (!q.exact) throw UsageError("exact application needs an exact table");
  QsTable base = q.transposed ? qs_transpose(q) : q;
  GaussPoly sum;
  for (std::size_t k = 0; k < base.mu.size(); ++k) {
    const GaussPoly d = phase_derivative_poly(base.n, base.mu[k], base.nu[k]);
    for (const auto& [e, c] : d) add_term(sum, e, base.a[k] * c);
  }
  return sum;
}

bool qs_certify(const QsTable& q) { return qs_apply_to_phase(q) == ps_product(q.n, q.s); }

int select_s(int n, const std::vector<std::pair<double, double>>& orders) {
  if (n < 1) throw UsageError("dimension must be at least 1");
  if (orders.empty()) throw UsageError("empty order profile");
  int best = 0;
  for (const auto& [m, rho] : orders) {
    if (!(rho > -1.0 && rho <= 1.0)) throw UsageError("type must lie in (-1, 1] for oscillatory integrals");
    if (std::isnan(m) || m == INFINITY) throw UsageError("order must be finite or -infinity");
    int s = 0;
    for (;; ++s) {
      const double top = 2.0 * s * n;
      const double bound = -2.0 * (n + 1);
      if (m - top < bound && m - top - rho * top < bound) break;
      if (s > 100000) throw UsageError("order too large for regularization");
    }
    best = std::max(best, s);
  }
  return best;
}

}  // namespace rdq

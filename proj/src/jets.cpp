#include "rdq/jets.hpp"

#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "rdq/errors.hpp"

namespace rdq {

int order_of(const MultiIndex& mu) { return std::accumulate(mu.begin(), mu.end(), 0); }

bool index_leq(const MultiIndex& a, const MultiIndex& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

double multi_factorial(const MultiIndex& mu) {
  double r = 1.0;
  for (int m : mu) r *= factorial(m);
  return r;
}

JetLayout::JetLayout(std::vector<int> orders) : orders_(std::move(orders)) {
  const int k = dim();
  strides_.assign(k, 1);
  for (int a = k - 1; a >= 0; --a) {
    if (orders_[a] < 0) throw UsageError("jet orders must be non-negative");
    strides_[a] = size_;
    size_ *= orders_[a] + 1;
  }
  degree_.resize(size_);
  std::vector<MultiIndex> idx(size_);
  for (int i = 0; i < size_; ++i) {
    idx[i] = multi(i);
    degree_[i] = order_of(idx[i]);
    max_degree_ = std::max(max_degree_, degree_[i]);
  }
  for (int i = 0; i < size_; ++i) {
    for (int j = i; j < size_; ++j) {
      int kk = 0;
      bool ok = true;
      for (int a = 0; a < k; ++a) {
        const int s = idx[i][a] + idx[j][a];
        if (s > orders_[a]) {
          ok = false;
          break;
        }
        kk += s * strides_[a];
      }
      if (ok) products_.push_back({i, j, kk});
    }
  }
}

std::shared_ptr<const JetLayout> JetLayout::get(const std::vector<int>& orders) {
  static std::mutex mtx;
  static std::map<std::vector<int>, std::shared_ptr<const JetLayout>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(orders);
  if (it != cache.end()) return it->second;
  auto p = std::make_shared<const JetLayout>(orders);
  cache.emplace(orders, p);
  return p;
}

int JetLayout::index(const MultiIndex& mu) const {
  if (static_cast<int>(mu.size()) != dim()) throw UsageError("multi-index has wrong dimension");
  int idx = 0;
  for (int a = 0; a < dim(); ++a) {
    if (mu[a] < 0 || mu[a] > orders_[a]) throw UsageError("multi-index exceeds jet order bound");
    idx += mu[a] * strides_[a];
  }
  return idx;
}

MultiIndex JetLayout::multi(int idx) const {
  MultiIndex mu(dim());
  for (int a = 0; a < dim(); ++a) {
    mu[a] = idx / strides_[a];
    idx %= strides_[a];
  }
  return mu;
}

Jet::Jet(LayoutPtr layout, CenterPtr center)
    : layout_(std::move(layout)), center_(std::move(center)), c_(layout_->size()) {}

Jet::Jet(LayoutPtr layout, CenterPtr center, std::vector<cplx> coeffs)
    : layout_(std::move(layout)), center_(std::move(center)), c_(std::move(coeffs)) {
  if (static_cast<int>(c_.size()) != layout_->size()) throw UsageError("coefficient table size mismatch");
}

Jet Jet::constant(LayoutPtr layout, CenterPtr center, cplx value) {
  Jet j(std::move(layout), std::move(center));
  j.c_[0] = value;
  return j;
}

Jet Jet::constant_like(const Jet& like, cplx value) { return constant(like.layout_, like.center_, value); }

cplx Jet::coeff(const MultiIndex& mu) const { return c_[layout_->index(mu)]; }

void Jet::check_compatible(const Jet& o) const {
  if (layout_ != o.layout_) throw UsageError("jets have different order bounds");
  if (center_ != o.center_ && *center_ != *o.center_) throw UsageError("jets have different centers");
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (auto& v : r.c_) v = -v;
  return r;
}

Jet jet_var(int axis, const std::vector<double>& center, const std::vector<int>& orders) {
  if (axis < 0 || axis >= static_cast<int>(center.size())) throw UsageError("jet_var: axis out of range");
  if (orders.size() != center.size()) throw UsageError("jet_var: orders and center differ in dimension");
  auto layout = JetLayout::get(orders);
  auto cptr = std::make_shared<const std::vector<double>>(center);
  Jet j(layout, cptr);
  j.coeffs()[0] = center[axis];
  if (orders[axis] >= 1) j.coeffs()[layout->strides()[axis]] = 1.0;
  return j;
}

std::vector<Jet> jet_vars(const std::vector<double>& center, const std::vector<int>& orders) {
  if (orders.size() != center.size()) throw UsageError("jet_vars: orders and center differ in dimension");
  auto layout = JetLayout::get(orders);
  auto cptr = std::make_shared<const std::vector<double>>(center);
  std::vector<Jet> out;
  out.reserve(center.size());
  for (std::size_t a = 0; a < center.size(); ++a) {
    Jet j(layout, cptr);
    j.coeffs()[0] = center[a];
    if (orders[a] >= 1) j.coeffs()[layout->strides()[a]] = 1.0;
    out.push_back(std::move(j));
  }
  return out;
}

Jet jet_mul(const Jet& a, const Jet& b) {
  a.check_compatible(b);
  Jet r(a.layout_ptr(), a.center_ptr());
  auto rc = r.coeffs();
  auto ac = a.coeffs();
  auto bc = b.coeffs();
  // Symmetric pairing keeps a*b and b*a bit-identical.
  for (const auto& t : a.layout().products())
    rc[t.k] += t.i == t.j ? ac[t.i] * bc[t.i] : ac[t.i] * bc[t.j] + ac[t.j] * bc[t.i];
  return r;
}

Jet operator*(const Jet& a, const Jet& b) { return jet_mul(a, b); }

Jet jet_div(const Jet& a, const Jet& b) { return jet_mul(a, jet_apply_unary(Elementary::Reciprocal, b)); }

namespace {

bool on_branch_cut(cplx z) { return z.imag() == 0.0 && z.real() <= 0.0; }

std::string describe(cplx z) {
  std::ostringstream os;
  os << "(" << z.real() << "," << z.imag() << ")";
  return os.str();
}

}  // namespace

std::vector<cplx> elementary_series(Elementary f, cplx a0, int degree, cplx alpha) {
  std::vector<cplx> s(degree + 1);
  switch (f) {
    case Elementary::Exp: {
      const cplx e = std::exp(a0);
      double fact = 1.0;
      for (int j = 0; j <= degree; ++j) {
        if (j > 0) fact *= j;
        s[j] = e / fact;
      }
      break;
    }
    case Elementary::Sin:
    case Elementary::Cos: {
      const cplx sn = std::sin(a0), cs = std::cos(a0);
      const cplx cyc_sin[4] = {sn, cs, -sn, -cs};
      const cplx cyc_cos[4] = {cs, -sn, -cs, sn};
      const cplx* cyc = f == Elementary::Sin ? cyc_sin : cyc_cos;
      double fact = 1.0;
      for (int j = 0; j <= degree; ++j) {
        if (j > 0) fact *= j;
        s[j] = cyc[j % 4] / fact;
      }
      break;
    }
    case Elementary::Reciprocal: {
      if (a0 == cplx(0.0)) throw DomainError("reciprocal of a jet with zero constant term");
      const cplx inv = 1.0 / a0;
      cplx p = inv;
      for (int j = 0; j <= degree; ++j) {
        s[j] = (j % 2 == 0 ? 1.0 : -1.0) * p;
        p *= inv;
      }
      break;
    }
    case Elementary::Power: {
      if (on_branch_cut(a0)) throw DomainError("power: constant term " + describe(a0) + " lies on the branch cut");
      const cplx base = std::exp(alpha * std::log(a0));
      const cplx inv = 1.0 / a0;
      cplx binom = 1.0, p = 1.0;
      for (int j = 0; j <= degree; ++j) {
        if (j > 0) {
          binom *= (alpha - double(j - 1)) / double(j);
          p *= inv;
        }
        s[j] = binom * base * p;
      }
      break;
    }
    case Elementary::Log: {
      if (on_branch_cut(a0)) throw DomainError("log: constant term " + describe(a0) + " lies on the branch cut");
      s[0] = std::log(a0);
      const cplx inv = 1.0 / a0;
      cplx p = 1.0;
      for (int j = 1; j <= degree; ++j) {
        p *= inv;
        s[j] = ((j % 2 == 1) ? 1.0 : -1.0) * p / double(j);
      }
      break;
    }
  }
  return s;
}

Jet compose_series(const std::vector<cplx>& series, const Jet& a) {
  Jet h = a;
  h.coeffs()[0] = 0.0;
  const int D = std::min<int>(static_cast<int>(series.size()) - 1, a.layout().max_degree());
  Jet r = Jet::constant_like(a, series[D]);
  for (int j = D - 1; j >= 0; --j) {
    r = jet_mul(r, h);
    r.coeffs()[0] += series[j];
  }
  return r;
}

Jet jet_apply_unary(Elementary f, const Jet& a, cplx alpha) {
  const int D = a.layout().max_degree();
  return compose_series(elementary_series(f, a.value(), D, alpha), a);
}

Jet jet_pow_int(const Jet& a, int k) {
  if (k < 0) return jet_apply_unary(Elementary::Reciprocal, jet_pow_int(a, -k));
  Jet r = Jet::constant_like(a, 1.0);
  Jet base = a;
  while (k > 0) {
    if (k & 1) r = jet_mul(r, base);
    k >>= 1;
    if (k) base = jet_mul(base, base);
  }
  return r;
}

cplx extract_partial(const Jet& a, const MultiIndex& mu) {
  return multi_factorial(mu) * a.coeff(mu);
}

Jet compose_multi(std::span<const cplx> own, const JetLayout& own_layout, std::span<const Jet> h) {
  const int k = own_layout.dim();
  if (static_cast<int>(h.size()) != k) throw UsageError("compose_multi: dimension mismatch");
  if (k == 0) throw UsageError("compose_multi: needs at least one input");
  const int D = h[0].layout().max_degree();
  std::vector<std::vector<Jet>> powers(k);
  for (int i = 0; i < k; ++i) {
    const int top = std::min(own_layout.orders()[i], D);
    powers[i].push_back(Jet::constant_like(h[0], 1.0));
    for (int p = 1; p <= top; ++p) powers[i].push_back(jet_mul(powers[i].back(), h[i]));
  }
  Jet r(h[0].layout_ptr(), h[0].center_ptr());
  auto rc = r.coeffs();
  for (int idx = 0; idx < own_layout.size(); ++idx) {
    if (own[idx] == cplx(0.0) || own_layout.degree(idx) > D) continue;
    const MultiIndex c = own_layout.multi(idx);
    int first = -1;
    for (int i = 0; i < k; ++i)
      if (c[i] > 0) {
        first = i;
        break;
      }
    if (first < 0) {
      rc[0] += own[idx];
      continue;
    }
    Jet term = powers[first][c[first]];
    for (int i = first + 1; i < k; ++i)
      if (c[i] > 0) term = jet_mul(term, powers[i][c[i]]);
    auto tc = term.coeffs();
    for (int q = 0; q < r.size(); ++q) rc[q] += own[idx] * tc[q];
  }
  return r;
}

bool are_coordinate_jets(std::span<const Jet> inputs) {
  if (inputs.empty()) return false;
  const auto& lay = inputs[0].layout();
  if (lay.dim() != static_cast<int>(inputs.size())) return false;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    const Jet& j = inputs[a];
    if (j.layout_ptr() != inputs[0].layout_ptr() || j.center_ptr() != inputs[0].center_ptr()) return false;
    auto c = j.coeffs();
    const int unit = lay.orders()[a] >= 1 ? lay.strides()[a] : -1;
    for (int q = 1; q < j.size(); ++q) {
      const cplx want = (q == unit) ? cplx(1.0) : cplx(0.0);
      if (c[q] != want) return false;
    }
  }
  return true;
}

}  // namespace rdq

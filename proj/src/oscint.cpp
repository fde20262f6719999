#include "rdq/oscint.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace rdq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::MatrixXd to_eigen(int n, const std::vector<double>& a) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a[i * n + j];
  return m;
}

std::vector<double> from_eigen(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<double> a(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = m(i, j);
  return a;
}

}  // namespace

// ---- pairing and plan -------------------------------------------------------

Pairing Pairing::identity(int n) {
  if (n < 1) throw UsageError("pairing dimension must be at least 1");
  Pairing p;
  p.n = n;
  return p;
}

Pairing Pairing::matrix(int n, std::vector<double> M) {
  Pairing p;
  p.n = n;
  p.M = std::move(M);
  p.validate();
  return p;
}

bool Pairing::is_identity() const {
  if (M.empty()) return true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (M[i * n + j] != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

std::vector<double> Pairing::dense() const {
  if (!M.empty()) return M;
  std::vector<double> id(n * n, 0.0);
  for (int i = 0; i < n; ++i) id[i * n + i] = 1.0;
  return id;
}

void Pairing::validate() const {
  if (n < 1) throw UsageError("pairing dimension must be at least 1");
  if (M.empty()) return;
  if (static_cast<int>(M.size()) != n * n) throw UsageError("pairing matrix must have n*n entries");
  for (double v : M)
    if (!std::isfinite(v)) throw UsageError("pairing matrix entries must be finite");
  const double det = to_eigen(n, M).determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "pairing matrix must satisfy |det M| = 1 (det M = " << det << ")";
    throw UsageError(os.str());
  }
}

void QuadraturePlan::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw UsageError("radius must be positive and finite");
  if (!(radius_x >= 0.0) || !std::isfinite(radius_x)) throw UsageError("x radius must be non-negative and finite");
  if (panels < 0) throw UsageError("panel count must be positive (or 0 for automatic)");
  if (rule_order < 2 || rule_order > 16) throw UsageError("rule order must lie in [2, 16]");
  if (s && *s < 0) throw UsageError("regularization order s must be non-negative");
  if (!(tol >= 0.0)) throw UsageError("tolerance must be non-negative");
  if (max_refinements < 0) throw UsageError("max refinements must be non-negative");
  if (refinement == Refinement::DoubleAndCompare && max_refinements < 1)
    throw UsageError("double-and-compare refinement needs max refinements >= 1");
}

std::string IntegralResult::to_json() const {
  nlohmann::ordered_json j;
  j["value"] = nlohmann::ordered_json::array();
  for (const auto& v : value) j["value"].push_back({v.real(), v.imag()});
  j["err"] = err;
  j["s"] = s;
  j["radius"] = radius;
  j["panels"] = panels;
  return j.dump();
}

// ---- rules ------------------------------------------------------------------

AxisRule gauss_legendre(int order) {
  if (order < 1) throw UsageError("Gauss rule order must be positive");
  AxisRule r;
  r.nodes.resize(order);
  r.weights.resize(order);
  for (int k = 0; k < (order + 1) / 2; ++k) {
    double x = std::cos(std::numbers::pi * (k + 0.75) / (order + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 12; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= order; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= order; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = order == 1 ? 1.0 : order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[k] = -x;
    r.nodes[order - 1 - k] = x;
    r.weights[k] = r.weights[order - 1 - k] = w;
  }
  if (order % 2 == 1) r.nodes[order / 2] = 0.0;
  return r;
}

AxisRule composite_rule(double radius, int panels, int order) {
  if (!(radius > 0.0)) throw UsageError("rule radius must be positive");
  if (panels < 1) throw UsageError("panel count must be positive");
  const AxisRule g = gauss_legendre(order);
  const double h = 2.0 * radius / panels;
  AxisRule r;
  r.nodes.reserve(static_cast<std::size_t>(panels) * order);
  r.weights.reserve(r.nodes.capacity());
  for (int k = 0; k < panels; ++k) {
    const double c = -radius + (k + 0.5) * h;
    for (int j = 0; j < order; ++j) {
      r.nodes.push_back(c + 0.5 * h * g.nodes[j]);
      r.weights.push_back(0.5 * h * g.weights[j]);
    }
  }
  return r;
}

int auto_panels(double radius, double conjugate_radius, int order) {
  // Panel width spans order/4 periods of e^{i t R'}.
  const double width = (order / 4.0) * kTwoPi / std::max(conjugate_radius, 1e-300);
  return std::max(1, static_cast<int>(std::ceil(2.0 * radius / width - 1e-9)));
}

namespace {

AxisRule shifted(AxisRule r, double c) {
  for (double& x : r.nodes) x += c;
  return r;
}

std::size_t grid_size(const std::vector<AxisRule>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.nodes.size();
  return n;
}

// Point and weight of a flat tensor index (first axis slowest).
double grid_point(const std::vector<AxisRule>& axes, std::size_t flat, double* out) {
  double w = 1.0;
  for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
    const std::size_t m = axes[a].nodes.size();
    const std::size_t i = flat % m;
    flat /= m;
    out[a] = axes[a].nodes[i];
    w *= axes[a].weights[i];
  }
  return w;
}

}  // namespace

// ---- kernels ----------------------------------------------------------------

namespace kernels {

std::vector<cplx> separable_sum(const std::vector<AxisRule>& p_axes, const std::vector<AxisRule>& x_axes,
                                const std::vector<cplx>& U, const std::vector<cplx>& Vt, int K, int d,
                                Exec exec, std::vector<double>* abs_sum) {
  const int n = static_cast<int>(p_axes.size());
  if (n < 1 || static_cast<int>(x_axes.size()) != n) throw UsageError("separable_sum: axis count mismatch");
  const std::size_t C = static_cast<std::size_t>(K) * d;
  const std::size_t Np = grid_size(p_axes), Nx = grid_size(x_axes);
  if (U.size() != Np * K || Vt.size() != Nx * C) throw UsageError("separable_sum: table size mismatch");

  // Replace the x axes by p axes one at a time: out[o][i][in] = sum_j wx_j e^{i p_i x_j} data[o][j][in].
  std::vector<cplx> data = Vt;
  std::size_t outer = 1;
  for (int a = 0; a < n; ++a) {
    std::size_t inner = C;
    for (int b = a + 1; b < n; ++b) inner *= x_axes[b].nodes.size();
    const auto& pa = p_axes[a].nodes;
    const auto& xa = x_axes[a];
    const std::size_t mp = pa.size(), mx = xa.nodes.size();
    std::vector<cplx> out(outer * mp * inner, 0.0);
    parallel_for(
        mp,
        [&](std::size_t i) {
          std::vector<cplx> row(mx);
          for (std::size_t j = 0; j < mx; ++j) {
            const double ph = pa[i] * xa.nodes[j];
            row[j] = xa.weights[j] * cplx(std::cos(ph), std::sin(ph));
          }
          for (std::size_t o = 0; o < outer; ++o) {
            cplx* dst = &out[(o * mp + i) * inner];
            for (std::size_t j = 0; j < mx; ++j) {
              const cplx e = row[j];
              const cplx* src = &data[(o * mx + j) * inner];
              for (std::size_t t = 0; t < inner; ++t) dst[t] += e * src[t];
            }
          }
        },
        exec);
    data.swap(out);
    outer *= mp;
  }

  std::vector<cplx> part(Np * d, 0.0);
  parallel_for(
      Np,
      [&](std::size_t i) {
        std::vector<double> pt(n);
        const double w = grid_point(p_axes, i, pt.data());
        for (int k = 0; k < K; ++k) {
          const cplx u = w * U[i * K + k];
          for (int c = 0; c < d; ++c) part[i * d + c] += u * data[i * C + k * d + c];
        }
      },
      exec);
  std::vector<cplx> total(d, 0.0);
  for (std::size_t i = 0; i < Np; ++i)
    for (int c = 0; c < d; ++c) total[c] += part[i * d + c];
  if (abs_sum) {
    std::vector<double> a(K, 0.0), b(C, 0.0), pt(n);
    for (std::size_t i = 0; i < Np; ++i) {
      const double w = grid_point(p_axes, i, pt.data());
      for (int k = 0; k < K; ++k) a[k] += w * std::abs(U[i * K + k]);
    }
    for (std::size_t j = 0; j < Nx; ++j) {
      const double w = grid_point(x_axes, j, pt.data());
      for (std::size_t t = 0; t < C; ++t) b[t] += w * std::abs(Vt[j * C + t]);
    }
    abs_sum->assign(d, 0.0);
    for (int k = 0; k < K; ++k)
      for (int c = 0; c < d; ++c) (*abs_sum)[c] += a[k] * b[k * d + c];
  }
  return total;
}

std::vector<cplx> generic_sum(const std::vector<AxisRule>& p_axes, const std::vector<AxisRule>& x_axes,
                              const PointFn& g, int d, Exec exec, std::vector<double>* abs_sum) {
  const int n = static_cast<int>(p_axes.size());
  if (n < 1 || static_cast<int>(x_axes.size()) != n) throw UsageError("generic_sum: axis count mismatch");
  const std::size_t Np = grid_size(p_axes), Nx = grid_size(x_axes);
  std::vector<cplx> part(Np * d, 0.0);
  std::vector<double> mag(Np * d, 0.0);
  parallel_for(
      Np,
      [&](std::size_t i) {
        std::vector<double> pt(2 * n), m(d, 0.0);
        std::vector<cplx> val(d), acc(d, 0.0);
        const double wp = grid_point(p_axes, i, pt.data());
        for (std::size_t j = 0; j < Nx; ++j) {
          const double wx = grid_point(x_axes, j, pt.data() + n);
          double ph = 0.0;
          for (int a = 0; a < n; ++a) ph += pt[a] * pt[n + a];
          g(pt, val);
          const cplx e = wx * cplx(std::cos(ph), std::sin(ph));
          for (int c = 0; c < d; ++c) {
            acc[c] += e * val[c];
            m[c] += wx * std::abs(val[c]);
          }
        }
        for (int c = 0; c < d; ++c) {
          part[i * d + c] = wp * acc[c];
          mag[i * d + c] = wp * m[c];
        }
      },
      exec);
  std::vector<cplx> total(d, 0.0);
  for (std::size_t i = 0; i < Np; ++i)
    for (int c = 0; c < d; ++c) total[c] += part[i * d + c];
  if (abs_sum) {
    abs_sum->assign(d, 0.0);
    for (std::size_t i = 0; i < Np; ++i)
      for (int c = 0; c < d; ++c) (*abs_sum)[c] += mag[i * d + c];
  }
  return total;
}

}  // namespace kernels

// ---- regularization ---------------------------------------------------------

int select_s(int n, const OrderProfile& profile) {
  std::vector<std::pair<double, double>> orders;
  for (const auto& [name, mr] : profile.entries) orders.push_back(mr);
  return select_s(n, orders);
}

namespace {

const QsTable& transposed_table(int n, int s) {
  static std::mutex mtx;
  static std::map<std::pair<int, int>, QsTable> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find({n, s});
  if (it == cache.end()) it = cache.emplace(std::make_pair(n, s), qs_transpose_coefficients(n, s)).first;
  return it->second;
}

struct RegTables {
  int n = 1, s = 0;
  LayoutPtr full, half;
  std::vector<int> full_multi, half_multi;
  std::vector<cplx> B;    // over the (p, x) box
  std::vector<cplx> Bnm;  // [nu * S + mu] over the half box
  int S = 1;
};

std::vector<int> flat_multis(const JetLayout& lay) {
  std::vector<int> m;
  for (int i = 0; i < lay.size(); ++i) {
    const auto mi = lay.multi(i);
    m.insert(m.end(), mi.begin(), mi.end());
  }
  return m;
}

RegTables make_tables(int n, int s) {
  RegTables t;
  t.n = n;
  t.s = s;
  t.full = JetLayout::get(std::vector<int>(2 * n, s));
  t.half = JetLayout::get(std::vector<int>(n, s));
  t.full_multi = flat_multis(*t.full);
  t.half_multi = flat_multis(*t.half);
  t.S = t.half->size();
  const QsTable& q = transposed_table(n, s);
  t.B.assign(t.full->size(), 0.0);
  for (std::size_t k = 0; k < q.value.size(); ++k) {
    MultiIndex key = q.nu[k];
    key.insert(key.end(), q.mu[k].begin(), q.mu[k].end());
    t.B[t.full->index(key)] = q.value[k] * multi_factorial(q.mu[k]) * multi_factorial(q.nu[k]);
  }
  t.Bnm.assign(static_cast<std::size_t>(t.S) * t.S, 0.0);
  for (int a = 0; a < t.S; ++a)
    for (int b = 0; b < t.S; ++b) {
      MultiIndex key = t.half->multi(a);
      const auto mb = t.half->multi(b);
      key.insert(key.end(), mb.begin(), mb.end());
      t.Bnm[a * t.S + b] = t.B[t.full->index(key)];
    }
  return t;
}

// Taylor coefficients of (i + t)^{-s} at t0.
void weight_series(double t0, int s, cplx* w) {
  const cplx z(t0, 1.0);
  cplx zp = std::pow(z, -s);
  double c = 1.0;
  for (int j = 0; j <= s; ++j) {
    w[j] = (j % 2 ? -c : c) * zp;
    c = c * (s + j) / (j + 1);
    zp /= z;
  }
}

std::vector<cplx> tensor_weights(const JetLayout& lay, const std::vector<int>& multi, std::span<const double> pt,
                                 int s) {
  const int k = lay.dim();
  std::vector<cplx> series(static_cast<std::size_t>(k) * (s + 1));
  for (int a = 0; a < k; ++a) weight_series(pt[a], s, &series[a * (s + 1)]);
  std::vector<cplx> w(lay.size());
  for (int i = 0; i < lay.size(); ++i) {
    cplx v = 1.0;
    for (int a = 0; a < k; ++a) v *= series[a * (s + 1) + multi[i * k + a]];
    w[i] = v;
  }
  return w;
}

// Regularized integrand at (p, x') in coordinates where the pairing is the identity; F is read at
// (p, Minv x').
void regularized_point(const SymbolFn& F, const RegTables& t, const std::vector<double>& Minv,
                       std::span<const double> pt, std::span<cplx> out) {
  const int n = t.n;
  if (t.s == 0) {
    if (Minv.empty()) {
      F.eval_into(pt, out);
      return;
    }
    std::vector<double> q(pt.begin(), pt.end());
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += Minv[i * n + j] * pt[n + j];
      q[n + i] = v;
    }
    F.eval_into(q, out);
    return;
  }
  const std::vector<double> center(pt.begin(), pt.end());
  std::vector<Jet> vars = jet_vars(center, t.full->orders());
  std::vector<Jet> fj;
  if (Minv.empty()) {
    fj = F.on_jets(vars);
  } else {
    std::vector<Jet> in(vars.begin(), vars.begin() + n);
    for (int i = 0; i < n; ++i) {
      Jet acc = Jet::constant_like(vars[0], 0.0);
      for (int j = 0; j < n; ++j)
        if (Minv[i * n + j] != 0.0) acc += vars[n + j] * cplx(Minv[i * n + j]);
      in.push_back(std::move(acc));
    }
    fj = F.on_jets(in);
  }
  const auto W = tensor_weights(*t.full, t.full_multi, pt, t.s);
  std::vector<cplx> C(t.full->size(), 0.0);
  for (const auto& tr : t.full->products()) {
    C[tr.i] += t.B[tr.k] * W[tr.j];
    if (tr.i != tr.j) C[tr.j] += t.B[tr.k] * W[tr.i];
  }
  for (std::size_t c = 0; c < fj.size(); ++c) {
    cplx acc = 0.0;
    const auto co = fj[c].coeffs();
    for (int i = 0; i < t.full->size(); ++i) acc += co[i] * C[i];
    out[c] = acc;
  }
}

int resolve_n(const SymbolFn& F, const Pairing& pairing) {
  if (F.k < 2 || F.k % 2 != 0) throw UsageError("oscillatory integrands need variables (p, x) of equal dimension");
  const int n = F.k / 2;
  pairing.validate();
  if (pairing.n != n && !pairing.M.empty()) throw UsageError("pairing dimension does not match the integrand");
  return n;
}

std::vector<double> inverse_or_empty(int n, const Pairing& pairing) {
  if (pairing.M.empty() || pairing.is_identity()) return {};
  return from_eigen(to_eigen(n, pairing.M).inverse());
}

}  // namespace

PlainEvaluator regularize(const SymbolFn& F, int s, const Pairing& pairing) {
  if (s < 0) throw UsageError("regularization order s must be non-negative");
  const int n = resolve_n(F, pairing);
  auto t = std::make_shared<RegTables>(make_tables(n, s));
  const std::vector<double> Minv = inverse_or_empty(n, pairing);
  const std::vector<double> M = Minv.empty() ? std::vector<double>{} : pairing.M;
  return [F, t, Minv, M, n](std::span<const double> pt, std::span<cplx> out) {
    if (M.empty()) return regularized_point(F, *t, Minv, pt, out);
    std::vector<double> q(pt.begin(), pt.end());
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += M[i * n + j] * pt[n + j];
      q[n + i] = v;
    }
    regularized_point(F, *t, Minv, q, out);
  };
}

// ---- integration ------------------------------------------------------------

namespace {

using Evaluate = std::function<std::vector<cplx>(int, int, std::vector<double>&)>;

// Relative rounding allowance applied to the absolute sum of the quadrature terms.
constexpr double kRoundoff = 4.0 * std::numeric_limits<double>::epsilon();

IntegralResult refine_loop(const Evaluate& eval, int pp, int px, const QuadraturePlan& plan, int s, int d) {
  IntegralResult r;
  r.s = s;
  r.radius = plan.radius;
  r.panels = std::max(pp, px);
  std::vector<double> mag;
  r.value = eval(pp, px, mag);
  r.err.assign(d, 0.0);
  for (int c = 0; c < d; ++c) r.err[c] = kRoundoff * mag[c];
  if (plan.refinement == QuadraturePlan::Refinement::None) return r;
  for (int level = 0; level < plan.max_refinements; ++level) {
    pp *= 2;
    px *= 2;
    auto fine = eval(pp, px, mag);
    bool ok = true;
    for (int c = 0; c < d; ++c) {
      r.err[c] = std::abs(fine[c] - r.value[c]) + kRoundoff * mag[c];
      if (!(r.err[c] <= plan.tol)) ok = false;
    }
    auto coarse = std::move(r.value);
    r.value = std::move(fine);
    r.panels = std::max(pp, px);
    if (ok) return r;
    if (level + 1 == plan.max_refinements) {
      std::ostringstream os;
      os << "oscillatory quadrature did not reach tolerance " << plan.tol << " after " << plan.max_refinements
         << " refinement(s); error estimate " << *std::max_element(r.err.begin(), r.err.end());
      throw NonConvergence(os.str(), coarse, r.value);
    }
  }
  return r;
}

std::vector<AxisRule> axes(int n, double radius, int panels, int order) {
  return std::vector<AxisRule>(n, composite_rule(radius, panels, order));
}

IntegralResult integrate(const SymbolFn& F, const QuadraturePlan& plan, const Pairing& pairing, int s) {
  const int n = resolve_n(F, pairing);
  const int d = F.d;
  const double R = plan.radius, Rx = plan.rx();
  const int order = plan.rule_order;
  const Exec exec = plan.exec;
  auto t = std::make_shared<RegTables>(make_tables(n, s));
  const std::vector<double> Minv = inverse_or_empty(n, pairing);
  const double scale = std::pow(kTwoPi, -n);

  Evaluate eval;
  if (F.separable && F.separable->n == n && !F.separable->terms.empty()) {
    std::vector<SymbolFn> us, vs;
    for (const auto& term : F.separable->terms) {
      us.push_back(term.u);
      vs.push_back(Minv.empty() ? term.v : gl_pullback(term.v, Minv));
    }
    eval = [=](int pp, int px, std::vector<double>& mag) {
      const auto pa = axes(n, R, pp, order), xa = axes(n, Rx, px, order);
      const int S = t->S, nt = static_cast<int>(us.size()), K = nt * S;
      const std::size_t Np = grid_size(pa), Nx = grid_size(xa);
      const std::vector<int> ord(n, s);
      std::vector<cplx> U(Np * K), Vt(Nx * K * d, 0.0);
      parallel_for(
          Np,
          [&](std::size_t i) {
            std::vector<double> pt(n);
            grid_point(pa, i, pt.data());
            const auto W = tensor_weights(*t->half, t->half_multi, pt, s);
            for (int r = 0; r < nt; ++r) {
              const Jet u = us[r].eval_jet(pt, ord)[0];
              const Jet uw = jet_mul(u, Jet(u.layout_ptr(), u.center_ptr(), W));
              for (int a = 0; a < S; ++a) U[i * K + r * S + a] = uw.coeffs()[a];
            }
          },
          exec);
      parallel_for(
          Nx,
          [&](std::size_t j) {
            std::vector<double> pt(n);
            grid_point(xa, j, pt.data());
            const auto W = tensor_weights(*t->half, t->half_multi, pt, s);
            for (int r = 0; r < nt; ++r) {
              const auto vj = vs[r].eval_jet(pt, ord);
              for (int c = 0; c < d; ++c) {
                const Jet vw = jet_mul(vj[c], Jet(vj[c].layout_ptr(), vj[c].center_ptr(), W));
                const auto co = vw.coeffs();
                for (int a = 0; a < S; ++a) {
                  cplx acc = 0.0;
                  for (int b = 0; b < S; ++b) acc += t->Bnm[a * S + b] * co[b];
                  Vt[(j * K + r * S + a) * d + c] = acc;
                }
              }
            }
          },
          exec);
      auto v = kernels::separable_sum(pa, xa, U, Vt, K, d, exec, &mag);
      for (auto& z : v) z *= scale;
      for (auto& m : mag) m *= scale;
      return v;
    };
  } else {
    eval = [=](int pp, int px, std::vector<double>& mag) {
      const auto pa = axes(n, R, pp, order), xa = axes(n, Rx, px, order);
      auto v = kernels::generic_sum(
          pa, xa, [&](std::span<const double> pt, std::span<cplx> out) { regularized_point(F, *t, Minv, pt, out); },
          d, exec, &mag);
      for (auto& z : v) z *= scale;
      for (auto& m : mag) m *= scale;
      return v;
    };
  }
  // For s > 0 the weights (i + t)^{-s} have poles at distance 1 from the axis; panels wider than 2
  // would slow the Gauss rule down regardless of the phase.
  auto pick = [&](double r, double rc) {
    int k = auto_panels(r, rc, order);
    if (s > 0) k = std::max(k, static_cast<int>(std::ceil(r - 1e-9)));
    return k;
  };
  const int pp = plan.panels > 0 ? plan.panels : pick(R, Rx);
  const int px = plan.panels > 0 ? plan.panels : pick(Rx, R);
  return refine_loop(eval, pp, px, plan, s, d);
}

}  // namespace

IntegralResult oscillatory_integral(const SymbolFn& F, const QuadraturePlan& plan, const Pairing& pairing) {
  plan.validate();
  const int n = resolve_n(F, pairing);
  const int need = select_s(n, F.profile);
  const int s = plan.s.value_or(need);
  if (s < need) {
    std::ostringstream os;
    os << "s = " << s << " is below the smallest admissible value " << need << " for this order profile";
    throw UsageError(os.str());
  }
  return integrate(F, plan, pairing, s);
}

IntegralResult direct_integral(const SymbolFn& F, const QuadraturePlan& plan, const Pairing& pairing) {
  plan.validate();
  return integrate(F, plan, pairing, 0);
}

// ---- cutoff limit -----------------------------------------------------------

IntegralResult cutoff_limit_integral(const SymbolFn& F, const std::vector<double>& schedule,
                                     const std::vector<double>& p0, const std::vector<double>& x0,
                                     const Pairing& pairing, int rule_order, Exec exec) {
  const int n = resolve_n(F, pairing);
  if (schedule.size() < 3) throw UsageError("cutoff schedule needs at least three values");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0) || !std::isfinite(schedule[i])) throw UsageError("cutoff schedule values must be positive");
    if (i > 0 && !(schedule[i] < schedule[i - 1])) throw UsageError("cutoff schedule must be strictly decreasing");
  }
  if (static_cast<int>(p0.size()) != n || static_cast<int>(x0.size()) != n)
    throw UsageError("cutoff center has wrong dimension");
  if (rule_order < 2 || rule_order > 16) throw UsageError("rule order must lie in [2, 16]");
  const int d = F.d;
  const std::vector<double> M = pairing.M.empty() ? Pairing::identity(n).dense() : pairing.dense();
  const std::vector<double> Minv = from_eigen(to_eigen(n, M).inverse());
  std::vector<double> Mx0(n, 0.0), row_abs(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Mx0[i] += M[i * n + j] * x0[j];
      row_abs[i] += std::abs(M[i * n + j]);
    }
  const double scale = std::pow(kTwoPi, -n);

  const bool sep = F.separable && F.separable->n == n && !F.separable->terms.empty();
  std::vector<std::vector<cplx>> values;
  std::vector<double> quad_err(d, 0.0);
  for (double eps : schedule) {
    const double h = 2.0 / eps;
    double p_reach = 0.0, x_reach = 0.0;
    for (int i = 0; i < n; ++i) {
      p_reach = std::max(p_reach, std::abs(p0[i]) + h);
      x_reach = std::max(x_reach, std::abs(Mx0[i]) + row_abs[i] * h);
    }
    // At least eight panels across the support so the bump transition is resolved.
    const int pp0 = std::max(8, auto_panels(h, x_reach, rule_order));
    auto eval = [&](int mult) {
      std::vector<AxisRule> pa, xa;
      for (int i = 0; i < n; ++i) {
        pa.push_back(shifted(composite_rule(h, pp0 * mult, rule_order), p0[i]));
        const double hx = row_abs[i] * h;
        xa.push_back(shifted(composite_rule(hx, std::max(8, auto_panels(hx, p_reach, rule_order)) * mult, rule_order),
                             Mx0[i]));
      }
      auto chi_x = [&](std::span<const double> xp, double* x) {
        double c = 1.0;
        for (int i = 0; i < n; ++i) {
          double xi = 0.0;
          for (int j = 0; j < n; ++j) xi += Minv[i * n + j] * xp[j];
          x[i] = xi;
          c *= bump(eps * std::abs(xi - x0[i]));
        }
        return c;
      };
      auto chi_p = [&](std::span<const double> p) {
        double c = 1.0;
        for (int i = 0; i < n; ++i) c *= bump(eps * std::abs(p[i] - p0[i]));
        return c;
      };
      if (sep) {
        const auto& terms = F.separable->terms;
        const int K = static_cast<int>(terms.size());
        const std::size_t Np = grid_size(pa), Nx = grid_size(xa);
        std::vector<cplx> U(Np * K), Vt(Nx * K * d);
        parallel_for(
            Np,
            [&](std::size_t i) {
              std::vector<double> pt(n);
              grid_point(pa, i, pt.data());
              const double c = chi_p(pt);
              for (int r = 0; r < K; ++r) U[i * K + r] = c == 0.0 ? cplx(0.0) : c * terms[r].u.eval(pt)[0];
            },
            exec);
        parallel_for(
            Nx,
            [&](std::size_t j) {
              std::vector<double> xp(n), x(n);
              grid_point(xa, j, xp.data());
              const double c = chi_x(xp, x.data());
              for (int r = 0; r < K; ++r) {
                std::vector<cplx> v(d, 0.0);
                if (c != 0.0) v = terms[r].v.eval(x);
                for (int k = 0; k < d; ++k) Vt[(j * K + r) * d + k] = c * v[k];
              }
            },
            exec);
        auto v = kernels::separable_sum(pa, xa, U, Vt, K, d, exec);
        for (auto& z : v) z *= scale;
        return v;
      }
      auto g = [&](std::span<const double> pt, std::span<cplx> out) {
        std::vector<double> q(pt.begin(), pt.end());
        const double chi = chi_p(pt.subspan(0, n)) * chi_x(pt.subspan(n), q.data() + n);
        if (chi == 0.0) {
          std::fill(out.begin(), out.end(), cplx(0.0));
          return;
        }
        F.eval_into(q, out);
        for (auto& z : out) z *= chi;
      };
      auto v = kernels::generic_sum(pa, xa, g, d, exec);
      for (auto& z : v) z *= scale;
      return v;
    };
    auto coarse = eval(1);
    auto fine = eval(2);
    for (int c = 0; c < d; ++c) quad_err[c] = std::max(quad_err[c], std::abs(fine[c] - coarse[c]));
    values.push_back(std::move(fine));
  }

  IntegralResult r;
  r.s = 0;
  r.radius = 2.0 / schedule.back();
  r.panels = 0;
  r.value.resize(d);
  r.err.resize(d);
  const std::size_t m = values.size();
  for (int c = 0; c < d; ++c) {
    const cplx v1 = values[m - 3][c], v2 = values[m - 2][c], v3 = values[m - 1][c];
    const cplx d1 = v2 - v1, d2 = v3 - v2;
    const double floor = 1e-12 * std::max(1.0, std::abs(v3)) + 10.0 * quad_err[c];
    cplx L = v3;
    if (std::abs(d2) > floor) {
      if (std::abs(d2) >= std::abs(d1))
        throw NonConvergence("cutoff limit: differences along the schedule are not decreasing", values[m - 2],
                             values[m - 1]);
      // Richardson step with the rate fitted from the last three values.
      const cplx q = d2 / d1;
      L = v3 + d2 * q / (1.0 - q);
    }
    r.value[c] = L;
    r.err[c] = std::abs(L - v3) + quad_err[c];
  }
  return r;
}

}  // namespace rdq

#include "rdq/deform.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rdq/errors.hpp"

namespace rdq {

namespace {

std::vector<double> identity_matrix(int n) {
  std::vector<double> I(n * n, 0.0);
  for (int i = 0; i < n; ++i) I[i * n + i] = 1.0;
  return I;
}

Jet linear_form(std::span<const Jet> y, const std::vector<double>& c) {
  Jet acc = Jet::constant_like(y[0], 0.0);
  for (std::size_t b = 0; b < c.size(); ++b)
    if (c[b] != 0.0) acc += y[b] * cplx(c[b]);
  return acc;
}

std::vector<double> real_centers(std::span<const Jet> in) {
  std::vector<double> c;
  for (const auto& j : in) c.push_back(j.value().real());
  return c;
}

// Multi-indices of total degree <= D in n variables, in the order of the box layout {D, ..., D}.
std::vector<MultiIndex> indices_up_to(int n, int D) {
  const auto lay = JetLayout::get(std::vector<int>(n, D));
  std::vector<MultiIndex> out;
  for (int i = 0; i < lay->size(); ++i)
    if (lay->degree(i) <= D) out.push_back(lay->multi(i));
  return out;
}

SymbolFn component(const SymbolFn& F, int i) {
  SymbolFn c = F;
  c.d = 1;
  c.separable.reset();
  c.system = SeminormSystem::max_abs(1);
  c.profile = OrderProfile::uniform(c.system, F.profile.entries.empty() ? 0.0 : F.profile.entries.begin()->second.first,
                                    0.0);
  c.jets = [F, i](std::span<const Jet> in) { return std::vector<Jet>{F.on_jets(in)[i]}; };
  c.plain = [F, i](std::span<const double> x, std::span<cplx> out) { out[0] = F.eval(x)[i]; };
  return c;
}

// p -> sum_j c(k, i, j) w_j(p) for fixed i.
SymbolFn contract_right(const SymbolFn& w, const BilinearPairing& mu, int i) {
  SymbolFn c = w;
  c.d = mu.d3;
  c.separable.reset();
  c.system = mu.target;
  c.profile = OrderProfile::uniform(c.system, 0.0, 0.0);
  c.jets = [w, mu, i](std::span<const Jet> in) {
    const auto ws = w.on_jets(in);
    std::vector<Jet> out;
    for (int k = 0; k < mu.d3; ++k) {
      Jet acc = Jet::constant_like(in[0], 0.0);
      for (int j = 0; j < mu.d2; ++j)
        if (mu.coeff(k, i, j) != cplx(0.0)) acc += ws[j] * mu.coeff(k, i, j);
      out.push_back(acc);
    }
    return out;
  };
  c.plain = [w, mu, i](std::span<const double> x, std::span<cplx> out) {
    const auto ws = w.eval(x);
    for (int k = 0; k < mu.d3; ++k) {
      cplx acc = 0.0;
      for (int j = 0; j < mu.d2; ++j) acc += mu.coeff(k, i, j) * ws[j];
      out[k] = acc;
    }
  };
  return c;
}

// Taylor coefficients in the trailing n variables of J(p, z) at z0, as jets in p. Output r*B + b
// holds the coefficient of (z - z0)^{betas[b]} of component r.
std::vector<Jet> z_slices(const SymbolFn& J, int m, const std::vector<double>& z0, const std::vector<MultiIndex>& betas,
                          int zdeg, std::span<const Jet> p) {
  const int n = J.k - m;
  const int D = p[0].layout().max_degree();
  std::vector<double> pt = real_centers(p);
  pt.insert(pt.end(), z0.begin(), z0.end());
  std::vector<int> ord(m, D);
  ord.insert(ord.end(), n, zdeg);
  const auto joint = J.eval_jet(pt, ord);
  const auto own = JetLayout::get(std::vector<int>(m, D));
  std::vector<Jet> h(p.begin(), p.end());
  for (auto& j : h) j.coeffs()[0] = 0.0;
  std::vector<Jet> out;
  std::vector<cplx> table(own->size());
  for (const auto& jt : joint) {
    for (const auto& beta : betas) {
      for (int a = 0; a < own->size(); ++a) {
        MultiIndex mu = own->multi(a);
        if (own->degree(a) > D) {
          table[a] = 0.0;
          continue;
        }
        mu.insert(mu.end(), beta.begin(), beta.end());
        table[a] = jt.coeff(mu);
      }
      out.push_back(compose_multi(table, *own, h));
    }
  }
  return out;
}

SymbolFn slice_symbol(const SymbolFn& J, int m, const std::vector<double>& z0, const std::vector<MultiIndex>& betas,
                      int zdeg, std::vector<int> pick) {
  SymbolFn s;
  s.k = m;
  s.d = static_cast<int>(pick.size());
  s.system = SeminormSystem::max_abs(s.d);
  s.profile = OrderProfile::uniform(s.system, 0.0, 0.0);
  s.jets = [J, m, z0, betas, zdeg, pick](std::span<const Jet> p) {
    const auto all = z_slices(J, m, z0, betas, zdeg, p);
    std::vector<Jet> out;
    for (int i : pick) out.push_back(i < 0 ? Jet::constant_like(p[0], 0.0) : all[i]);
    return out;
  };
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

cplx gk_complex(const std::function<cplx(double)>& f, double tol, double& err) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double e1 = 0.0, e2 = 0.0;
  const double re = gauss_kronrod<double, 61>::integrate([&](double t) { return f(t).real(); }, -inf, inf, 15, tol, &e1);
  const double im = gauss_kronrod<double, 61>::integrate([&](double t) { return f(t).imag(); }, -inf, inf, 15, tol, &e2);
  // boost reports the error relative to the L1 norm; turn it into an absolute bound.
  err += e1 * std::max(1.0, std::abs(re)) + e2 * std::max(1.0, std::abs(im));
  return {re, im};
}

cplx nested_gk(const std::function<cplx(const std::vector<double>&)>& f, std::vector<double>& y, int axis, double tol,
               double& err) {
  if (axis == static_cast<int>(y.size())) return f(y);
  return gk_complex(
      [&](double t) {
        y[axis] = t;
        return nested_gk(f, y, axis + 1, tol, err);
      },
      tol, err);
}

}  // namespace

// ---- parameters -------------------------------------------------------------

DeformationParams DeformationParams::scalar(double theta, QuadraturePlan plan) {
  DeformationParams p;
  p.theta = {theta};
  p.plan = plan;
  return p;
}

DeformationParams DeformationParams::matrix(int n, std::vector<double> theta, QuadraturePlan plan) {
  DeformationParams p;
  p.n = n;
  p.theta = std::move(theta);
  p.pairing = Pairing::identity(n);
  p.plan = plan;
  return p;
}

QuadraturePlan DeformationParams::default_inner_plan() {
  QuadraturePlan q;
  q.radius = 16.0;
  q.radius_x = 8.0;
  q.refinement = QuadraturePlan::Refinement::None;
  return q;
}

bool DeformationParams::skew() const {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (theta[i * n + j] != -theta[j * n + i]) return false;
  return true;
}

void DeformationParams::validate() const {
  if (n < 1) throw UsageError("deformation dimension must be positive");
  if (static_cast<int>(theta.size()) != n * n) throw UsageError("theta must be an n x n matrix");
  for (double t : theta)
    if (!std::isfinite(t)) throw UsageError("theta must be finite");
  if (pairing.n != n) throw UsageError("pairing dimension does not match theta");
  pairing.validate();
  plan.validate();
  inner.validate();
}

CovariantBilinear CovariantBilinear::pointwise(int n) {
  CovariantBilinear c;
  c.left = c.right = c.target = ActionSpec::translation(n);
  return c;
}

double covariance_residual(const CovariantBilinear& cb, const SymbolFn& v, const SymbolFn& w,
                           const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& zs) {
  const auto vw = pointwise_product(v, w, cb.mu);
  double worst = 0.0;
  for (const auto& x : xs) {
    const auto lhs = act(cb.target, x, vw);
    const auto rhs = pointwise_product(act(cb.left, x, v), act(cb.right, x, w), cb.mu);
    for (const auto& z : zs) {
      const auto a = lhs.eval(z), b = rhs.eval(z);
      for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    }
  }
  return worst;
}

// ---- symbol helpers ---------------------------------------------------------

SymbolFn separable_symbol(const SymbolFn& u, const SymbolFn& v) {
  if (u.k != v.k) throw UsageError("separable factors must live on spaces of equal dimension");
  if (u.d != 1) throw UsageError("left separable factor must be scalar");
  SymbolFn H = outer_product(u, v);
  auto form = std::make_shared<SeparableForm>();
  form->n = u.k;
  form->terms.push_back({u, v});
  H.separable = form;
  return H;
}

SymbolFn joint_orbit(const ActionSpec& spec, const SymbolFn& f, const std::vector<double>& A, int m) {
  spec.validate();
  const int n = spec.n;
  if (f.k != n) throw UsageError("joint orbit: dimension mismatch");
  if (m < 1 || static_cast<int>(A.size()) != n * m) throw UsageError("joint orbit: parameter matrix has wrong size");
  SymbolFn g;
  g.k = m + n;
  g.d = f.d;
  g.system = f.system;
  g.profile = OrderProfile::uniform(g.system, 0.0, 0.0);
  auto params = [A, n, m](std::span<const Jet> in) {
    std::vector<Jet> xs;
    for (int a = 0; a < n; ++a)
      xs.push_back(linear_form(in.subspan(0, m), std::vector<double>(A.begin() + a * m, A.begin() + (a + 1) * m)));
    return xs;
  };
  if (std::holds_alternative<TranslationAction>(spec.variant)) {
    g.jets = [f, m, params](std::span<const Jet> in) {
      auto xs = params(in);
      for (std::size_t a = 0; a < xs.size(); ++a) xs[a] += in[m + a];
      return f.on_jets(xs);
    };
  } else if (const auto* ph = std::get_if<PhaseAction>(&spec.variant)) {
    const auto B = ph->B;
    g.jets = [f, m, n, B, params](std::span<const Jet> in) {
      const auto xs = params(in);
      const auto z = in.subspan(m);
      Jet s = Jet::constant_like(in[0], 0.0);
      for (int a = 0; a < n; ++a) {
        std::vector<double> row(B.begin() + a * n, B.begin() + (a + 1) * n);
        s += xs[a] * linear_form(z, row);
      }
      const Jet e = jet_apply_unary(Elementary::Exp, s * cplx(0.0, 1.0));
      auto out = f.on_jets(z);
      for (auto& o : out) o = jet_mul(e, o);
      return out;
    };
  } else {
    const CompactTau tau = std::get<CompactAction>(spec.variant).tau;
    g.jets = [f, m, tau, params](std::span<const Jet> in) {
      const auto xs = params(in);
      return f.on_jets(tau_n_on_jets(xs, in.subspan(m), tau));
    };
  }
  return g;
}

SymbolFn restrict_tail(const SymbolFn& F, const std::vector<double>& z0) {
  const int m = F.k - static_cast<int>(z0.size());
  if (m < 1) throw UsageError("restriction leaves no free variables");
  std::vector<int> pick(F.d);
  for (int i = 0; i < F.d; ++i) pick[i] = i;
  SymbolFn s = slice_symbol(F, m, z0, {MultiIndex(z0.size(), 0)}, 0, pick);
  s.system = F.system;
  s.profile = F.profile;
  return s;
}

SymbolFn conjugate_symbol(const SymbolFn& f) {
  SymbolFn g = f;
  g.separable.reset();
  g.jets = [f](std::span<const Jet> in) {
    auto out = f.on_jets(in);
    for (auto& j : out)
      for (auto& c : j.coeffs()) c = std::conj(c);
    return out;
  };
  g.plain = [f](std::span<const double> x, std::span<cplx> out) {
    f.eval_into(x, out);
    for (auto& c : out) c = std::conj(c);
  };
  return g;
}

// ---- deformed products ------------------------------------------------------

namespace {

SymbolFn deformation_integrand(const CovariantBilinear& cb, const DeformationParams& params, const SymbolFn& v,
                               const SymbolFn& w, const std::vector<double>& x) {
  const int n = params.n;
  if (cb.left.n != n || cb.right.n != n) throw UsageError("action dimension does not match theta");
  if (v.d != cb.mu.d1 || w.d != cb.mu.d2) throw UsageError("symbols do not match the bilinear pairing");
  if (static_cast<int>(x.size()) != n) throw UsageError("point has wrong dimension");
  const SymbolFn u = orbit_symbol(cb.left, v, x, params.theta, n);
  const SymbolFn r = orbit_symbol(cb.right, w, x, identity_matrix(n), n);
  SymbolFn H = outer_product(u, r, cb.mu);
  auto form = std::make_shared<SeparableForm>();
  form->n = n;
  for (int i = 0; i < cb.mu.d1; ++i)
    form->terms.push_back({cb.mu.d1 == 1 ? u : component(u, i), contract_right(r, cb.mu, i)});
  H.separable = form;
  return H;
}

}  // namespace

IntegralResult deform_bilinear(const CovariantBilinear& cb, const DeformationParams& params, const SymbolFn& v,
                               const SymbolFn& w, const std::vector<double>& x) {
  params.validate();
  return oscillatory_integral(deformation_integrand(cb, params, v, w, x), params.plan, params.pairing);
}

IntegralResult moyal_product(const SymbolFn& f, const SymbolFn& g, const DeformationParams& params,
                             const std::vector<double>& x, MoyalMethod method) {
  params.validate();
  if (f.d != 1 || g.d != 1) throw UsageError("Moyal product expects scalar symbols");
  const auto H = deformation_integrand(CovariantBilinear::pointwise(params.n), params, f, g, x);
  switch (method) {
    case MoyalMethod::Oscillatory:
      return oscillatory_integral(H, params.plan, params.pairing);
    case MoyalMethod::Direct:
      return direct_integral(H, params.plan, params.pairing);
    case MoyalMethod::Cutoff:
      return cutoff_limit_integral(H, {0.5, 0.25, 0.125, 0.0625, 0.03125}, std::vector<double>(params.n, 0.0),
                                   std::vector<double>(params.n, 0.0), params.pairing, params.plan.rule_order,
                                   params.plan.exec);
  }
  throw UsageError("unknown Moyal method");
}

cplx moyal_series(const SymbolFn& f, const SymbolFn& g, double theta, double x, int terms) {
  if (f.k != 1 || g.k != 1 || f.d != 1 || g.d != 1) throw UsageError("Moyal series is implemented for scalar n = 1");
  if (terms < 0) throw UsageError("term count must be non-negative");
  const Jet a = f.eval_jet({x}, {terms})[0];
  const Jet b = g.eval_jet({x}, {terms})[0];
  // Coefficients are f^(m)/m!, so the m-th term is (i theta)^m m! a_m b_m.
  cplx sum = 0.0, w = 1.0;
  for (int m = 0; m <= terms; ++m) {
    sum += w * a.coeffs()[m] * b.coeffs()[m];
    w *= cplx(0.0, theta) * double(m + 1);
  }
  return sum;
}

PlainResult twisted_convolution(const SymbolFn& f, const SymbolFn& g, const std::vector<double>& theta,
                                const std::vector<double>& x, double tol) {
  const int n = f.k;
  if (g.k != n || f.d != 1 || g.d != 1) throw UsageError("twisted convolution expects scalar symbols on R^n");
  if (static_cast<int>(theta.size()) != n * n || static_cast<int>(x.size()) != n)
    throw UsageError("twisted convolution: dimension mismatch");
  std::vector<double> xt(n, 0.0);  // theta^T x, so <x, theta y> = <theta^T x, y>
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) xt[b] += theta[a * n + b] * x[a];
  auto integrand = [&](const std::vector<double>& y) {
    std::vector<double> d(n);
    double ph = 0.0;
    for (int a = 0; a < n; ++a) {
      d[a] = x[a] - y[a];
      ph += xt[a] * y[a];
    }
    return cplx(std::cos(ph), std::sin(ph)) * f.eval(y)[0] * g.eval(d)[0];
  };
  PlainResult r;
  std::vector<double> y(n, 0.0);
  r.value = nested_gk(integrand, y, 0, tol, r.err);
  return r;
}

SymbolFn deformed_symbol(const CovariantBilinear& cb, const DeformationParams& params, const SymbolFn& v,
                         const SymbolFn& w) {
  params.validate();
  const int n = params.n;
  if (cb.mu.d1 != 1 || cb.mu.d2 != 1 || cb.mu.d3 != 1) throw UsageError("deformed symbols need a scalar pairing");
  if (v.d != 1 || w.d != 1) throw UsageError("deformed symbols need scalar inputs");
  const cplx c = cb.mu.coeff(0, 0, 0);
  const SymbolFn JL = joint_orbit(cb.left, v, params.theta, n);
  const SymbolFn JR = joint_orbit(cb.right, w, identity_matrix(n), n);

  // Taylor coefficients of z -> mu_theta(v, w)(z) at z0 up to total degree D.
  auto coefficients = [=](const std::vector<double>& z0, int D) {
    const auto alphas = indices_up_to(n, D);
    const int A = static_cast<int>(alphas.size());
    auto form = std::make_shared<SeparableForm>();
    form->n = n;
    for (int b = 0; b < A; ++b) {
      const auto& beta = alphas[b];
      std::vector<int> pick(A, -1);
      for (int a = 0; a < A; ++a) {
        MultiIndex g(n);
        bool ok = true;
        for (int i = 0; i < n; ++i) {
          g[i] = alphas[a][i] - beta[i];
          ok = ok && g[i] >= 0;
        }
        if (!ok) continue;
        for (int e = 0; e < A; ++e)
          if (alphas[e] == g) pick[a] = e;
      }
      form->terms.push_back({slice_symbol(JL, n, z0, {beta}, D, {0}), slice_symbol(JR, n, z0, alphas, D, pick)});
    }
    SymbolFn H;
    H.k = 2 * n;
    H.d = A;
    H.system = SeminormSystem::max_abs(A);
    H.profile = OrderProfile::uniform(H.system, 0.0, 0.0);
    H.jets = [form, n, A](std::span<const Jet> in) {
      std::vector<Jet> out(A, Jet::constant_like(in[0], 0.0));
      for (const auto& t : form->terms) {
        const Jet u = t.u.on_jets(in.subspan(0, n))[0];
        const auto vs = t.v.on_jets(in.subspan(n));
        for (int a = 0; a < A; ++a) out[a] += u * vs[a];
      }
      return out;
    };
    H.separable = form;
    auto r = oscillatory_integral(H, params.inner, params.pairing);
    for (auto& z : r.value) z *= c;
    return std::make_pair(alphas, r.value);
  };

  SymbolFn s;
  s.k = n;
  s.d = 1;
  s.system = SeminormSystem::max_abs(1);
  s.profile = OrderProfile::uniform(s.system, 0.0, 0.0);
  s.jets = [n, coefficients](std::span<const Jet> in) {
    const int D = in[0].layout().max_degree();
    const auto z0 = real_centers(in);
    const auto [alphas, vals] = coefficients(z0, D);
    const auto own = JetLayout::get(std::vector<int>(n, D));
    std::vector<cplx> table(own->size(), 0.0);
    for (std::size_t a = 0; a < alphas.size(); ++a) table[own->index(alphas[a])] = vals[a];
    std::vector<Jet> h(in.begin(), in.end());
    for (auto& j : h) j.coeffs()[0] = 0.0;
    return std::vector<Jet>{compose_multi(table, *own, h)};
  };
  s.plain = [coefficients](std::span<const double> z, std::span<cplx> out) {
    out[0] = coefficients(std::vector<double>(z.begin(), z.end()), 0).second[0];
  };
  return s;
}

IntegralResult iterated_moyal(const SymbolFn& f, const SymbolFn& g, const std::vector<double>& theta,
                              const std::vector<double>& theta_prime, int n, const std::vector<double>& x,
                              const QuadraturePlan& plan) {
  if (static_cast<int>(theta.size()) != n * n || static_cast<int>(theta_prime.size()) != n * n)
    throw UsageError("theta must be an n x n matrix");
  if (f.k != n || g.k != n || f.d != 1 || g.d != 1) throw UsageError("iterated product expects scalar symbols on R^n");
  std::vector<double> A(n * 2 * n), B(n * 2 * n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      A[a * 2 * n + b] = theta_prime[a * n + b];
      A[a * 2 * n + n + b] = theta[a * n + b];
    }
  for (int a = 0; a < n; ++a) B[a * 2 * n + a] = B[a * 2 * n + n + a] = 1.0;
  const auto tr = ActionSpec::translation(n);
  const auto H = separable_symbol(orbit_symbol(tr, f, x, A, 2 * n), orbit_symbol(tr, g, x, B, 2 * n));
  return oscillatory_integral(H, plan, Pairing::identity(2 * n));
}

IntegralResult local_nc_product(const SymbolFn& f, const SymbolFn& g, const CompactTau& tau,
                                const std::vector<double>& theta, const std::vector<double>& y,
                                const QuadraturePlan& plan) {
  tau.validate();
  const auto spec = ActionSpec::compact(tau);
  CovariantBilinear cb;
  cb.left = cb.right = cb.target = spec;
  return deform_bilinear(cb, DeformationParams::matrix(tau.n, theta, plan), f, g, y);
}

// ---- reports ----------------------------------------------------------------

void PropertyReport::add(std::string identity, std::string instance, std::vector<double> point, double residual,
                         double tolerance) {
  entries.push_back({std::move(identity), std::move(instance), std::move(point), residual, tolerance,
                     std::isfinite(residual) && residual <= tolerance});
}

bool PropertyReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

std::string PropertyReport::to_jsonl() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << "{\"identity\":\"" << e.identity << "\",\"instance\":\"" << e.instance << "\",\"point\":[";
    for (std::size_t i = 0; i < e.point.size(); ++i) os << (i ? "," : "") << fmt(e.point[i]);
    os << "],\"residual\":" << fmt(e.residual) << ",\"tolerance\":" << fmt(e.tolerance)
       << ",\"pass\":" << (e.pass ? "true" : "false") << "}\n";
  }
  return os.str();
}

std::string PropertyReport::to_csv() const {
  std::ostringstream os;
  os << "identity,instance,point,residual,tolerance,pass\n";
  for (const auto& e : entries) {
    os << e.identity << ',' << e.instance << ',';
    for (std::size_t i = 0; i < e.point.size(); ++i) os << (i ? ";" : "") << fmt(e.point[i]);
    os << ',' << fmt(e.residual) << ',' << fmt(e.tolerance) << ',' << (e.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

PropertyEntry module_deform(const ActionSpec& alpha, const ActionSpec& beta, const DeformationParams& params,
                            const SymbolFn& a, const SymbolFn& b, const SymbolFn& psi, const std::vector<double>& x,
                            double tol) {
  CovariantBilinear alg, mod;
  alg.left = alg.right = alg.target = alpha;
  mod.left = alpha;
  mod.right = mod.target = beta;
  const auto ab = deformed_symbol(alg, params, a, b);
  const auto bpsi = deformed_symbol(mod, params, b, psi);
  const cplx lhs = deform_bilinear(mod, params, ab, psi, x).value[0];
  const cplx rhs = deform_bilinear(mod, params, a, bpsi, x).value[0];
  PropertyReport r;
  r.add("module", alpha.name() + "/" + beta.name(), x, std::abs(lhs - rhs), tol);
  return r.entries[0];
}

// ---- property suite ---------------------------------------------------------

QuadraturePlan SuiteConfig::default_suite_plan() {
  QuadraturePlan q;
  q.radius = 20.0;
  q.radius_x = 10.0;
  return q;
}

PropertyReport property_suite(const SuiteConfig& config) {
  if (config.n != 1 && config.n != 2) throw UsageError("property suite supports n = 1 and n = 2");
  const int n = config.n;
  auto wanted = [&](const std::string& name) {
    if (config.identities.empty()) return true;
    return std::find(config.identities.begin(), config.identities.end(), name) != config.identities.end();
  };
  const expr::VarLayout lay{n, false};
  SymbolFn f, g, h, one = constant_symbol(n, {1.0});
  if (n == 1) {
    f = with_schwartz_profile(symbol_from_expr("exp(-x1^2)", lay));
    g = with_schwartz_profile(symbol_from_expr("exp(-(x1-0.5)^2/2)", lay));
    h = with_schwartz_profile(symbol_from_expr("(1+x1)*exp(-x1^2/3)", lay));
  } else {
    f = with_schwartz_profile(symbol_from_expr("exp(-x1^2-x2^2)", lay));
    g = with_schwartz_profile(symbol_from_expr("exp(-(x1-0.5)^2/2-x2^2)", lay));
    h = with_schwartz_profile(symbol_from_expr("(1+x2)*exp(-(x1^2+x2^2)/3)", lay));
  }
  if (!config.f.empty()) f = with_schwartz_profile(symbol_from_expr(config.f, lay));
  if (!config.g.empty()) g = with_schwartz_profile(symbol_from_expr(config.g, lay));
  if (!config.h.empty()) h = with_schwartz_profile(symbol_from_expr(config.h, lay));
  std::vector<std::vector<double>> pts;
  for (double t : config.points) pts.push_back(n == 1 ? std::vector<double>{t} : std::vector<double>{t, 0.5 * t});
  auto theta_of = [n](double t) {
    return n == 1 ? std::vector<double>{t} : std::vector<double>{0.0, t, -t, 0.0};
  };
  auto params_of = [&](double t) { return DeformationParams::matrix(n, theta_of(t), config.plan); };
  auto tag = [](double t) { return "theta=" + fmt(t); };

  PropertyReport rep;
  const auto cb = CovariantBilinear::pointwise(n);
  for (const auto& x : pts) {
    if (wanted("theta-zero")) {
      const cplx v = moyal_product(f, g, params_of(0.0), x).value[0];
      rep.add("theta-zero", "gaussians", x, std::abs(v - f.eval(x)[0] * g.eval(x)[0]), 1e-5);
    }
    for (double t : config.thetas) {
      const auto P = params_of(t);
      if (wanted("identity")) {
        // The constant factor decays only through the regularization: no short x block.
        auto Q = P;
        Q.plan.radius = std::max(Q.plan.radius, 24.0);
        Q.plan.radius_x = 0.0;
        rep.add("identity", tag(t) + " f*1", x, std::abs(moyal_product(f, one, Q, x).value[0] - f.eval(x)[0]), 1e-5);
        rep.add("identity", tag(t) + " 1*f", x, std::abs(moyal_product(one, f, Q, x).value[0] - f.eval(x)[0]), 1e-5);
      }
      if (wanted("covariance")) {
        // alpha_s(f x h)(x) = (alpha_s f x alpha_s h)(x) for a fixed shift s.
        std::vector<double> shift(n, 0.35), xs(n);
        for (int i = 0; i < n; ++i) xs[i] = x[i] + shift[i];
        const auto tr = ActionSpec::translation(n);
        const cplx l = moyal_product(f, h, P, xs).value[0];
        const cplx r = moyal_product(act(tr, shift, f), act(tr, shift, h), P, x).value[0];
        rep.add("covariance", tag(t) + " translation", x, std::abs(l - r), 1e-6);
      }
      if (wanted("theta-additivity")) {
        const double t1 = 0.4 * t, t2 = 0.6 * t;
        const cplx it = iterated_moyal(f, g, theta_of(t1), theta_of(t2), n, x, config.plan).value[0];
        const cplx direct = moyal_product(f, g, P, x).value[0];
        rep.add("theta-additivity", fmt(t1) + "+" + fmt(t2), x, std::abs(it - direct), 1e-4);
      }
      if (wanted("associativity")) {
        const cplx l = deform_bilinear(cb, P, deformed_symbol(cb, P, f, g), h, x).value[0];
        const cplx r = deform_bilinear(cb, P, f, deformed_symbol(cb, P, g, h), x).value[0];
        rep.add("associativity", tag(t), x, std::abs(l - r), 1e-4);
      }
      if (wanted("module")) {
        auto e = module_deform(ActionSpec::translation(n), ActionSpec::translation(n), P, f, g, h, x, 1e-4);
        e.instance = tag(t) + " " + e.instance;
        rep.entries.push_back(e);
      }
      if (wanted("star")) {
        // conj(f x_theta h) = conj(h) x_{-theta^T} conj(f); for skew theta this is the star rule.
        auto Pt = P;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) Pt.theta[i * n + j] = -P.theta[j * n + i];
        const cplx l = std::conj(moyal_product(f, h, P, x).value[0]);
        const cplx r = moyal_product(conjugate_symbol(h), conjugate_symbol(f), Pt, x).value[0];
        rep.add("star", tag(t), x, std::abs(l - r), 1e-5);
      }
      if (wanted("semiclassical") && n == 1) {
        // (f x g - f g) / theta -> i f' g' with an O(theta) remainder.
        const double fp = f.eval_jet(x, {1})[0].coeffs()[1].real();
        const double gp = g.eval_jet(x, {1})[0].coeffs()[1].real();
        const cplx v = moyal_product(f, g, P, x).value[0];
        const double r = std::abs((v - f.eval(x)[0] * g.eval(x)[0]) / t - cplx(0.0, fp * gp));
        rep.add("semiclassical", tag(t), x, r, 2.0 * t);
      }
    }
  }
  return rep;
}

}  // namespace rdq

#include "rdq/actions.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "rdq/errors.hpp"

namespace rdq {

namespace {

constexpr double kL0 = 9.0 / 16.0 * 0.1353352832366127;  // (9/16) e^{-2}
constexpr double kBlendLo = 3.0 / 8.0, kBlendHi = 0.5;
// Inside (-1, 1) but closer to the boundary than this the field is below e^{-1000}.
constexpr double kFlatGap = 1e-3;
// Trajectories moving outward switch to the closed form once |phi| exceeds this.
constexpr double kSwitch = 0.55;

double b_fn(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

Jet b_jet(const Jet& u) { return jet_apply_unary(Elementary::Exp, -jet_apply_unary(Elementary::Reciprocal, u)); }

double field_pos(double y) {
  if (y >= 1.0 - kFlatGap) return 0.0;
  const double om = 1.0 - y;
  const double tail = om * om * std::exp(-1.0 / om);
  if (y >= kBlendHi) return tail;
  if (y <= kBlendLo) return kL0;
  const double t = (y - kBlendLo) / (kBlendHi - kBlendLo);
  const double a = b_fn(t), b = b_fn(1.0 - t);
  const double psi = a / (a + b);
  return psi * tail + (1.0 - psi) * kL0;
}

Jet field_pos(const Jet& y) {
  const double y0 = y.value().real();
  if (y0 >= 1.0 - kFlatGap) return Jet::constant_like(y, 0.0);
  if (y0 <= kBlendLo) return Jet::constant_like(y, kL0);
  const Jet om = (-y) + 1.0;
  const Jet tail = jet_mul(jet_mul(om, om), jet_apply_unary(Elementary::Exp, -jet_apply_unary(Elementary::Reciprocal, om)));
  if (y0 >= kBlendHi) return tail;
  const Jet t = (y + cplx(-kBlendLo)) * cplx(1.0 / (kBlendHi - kBlendLo));
  const Jet a = b_jet(t), b = b_jet((-t) + 1.0);
  const Jet psi = jet_div(a, a + b);
  return jet_mul(psi, tail) + jet_mul((-psi) + 1.0, Jet::constant_like(y, kL0));
}

// log e(a) with e(a) = exp(1/(1-a)).
double log_e(double a) { return 1.0 / (1.0 - a); }

// log(e(a) + c) computed without forming e(a).
double log_e_plus(double a, double c) {
  const double A = log_e(a);
  return A + std::log1p(c * std::exp(-A));
}

// The closed form stays valid while e(|phi|) + sigma c > e(1/2), i.e. the trajectory remains in
// the same tail.
bool tail_reaches(double a, double c) {
  const double A = log_e(a);
  if (A > 700.0) return true;
  return std::exp(A) + c > std::exp(log_e(kBlendHi));
}

// Closed form on the positive tail: 1 - 1/log(e(a) + c).
double tail_pos(double a, double c) { return 1.0 - 1.0 / log_e_plus(a, c); }

Jet tail_pos(const Jet& a, double c) {
  const Jet A = jet_apply_unary(Elementary::Reciprocal, (-a) + 1.0);
  const Jet E = jet_apply_unary(Elementary::Exp, -A);
  const Jet lg = A + jet_apply_unary(Elementary::Log, E * cplx(c) + 1.0);
  return (-jet_apply_unary(Elementary::Reciprocal, lg)) + 1.0;
}

using State = std::vector<double>;

struct FlowOps {
  std::function<void(const State&, State&)> field;
  // Closed-form flow for time c from a state with |phi_0| > 1/2.
  std::function<State(const State&, double)> tail;
};

void flow(State& phi, double x, const FlowOps& ops, double tol, bool use_tail) {
  namespace ode = boost::numeric::odeint;
  double rem = x;
  auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(tol, tol);
  auto sys = [&](const State& s, State& ds, double) { ops.field(s, ds); };
  for (int guard = 0; guard < 8 && rem != 0.0; ++guard) {
    const double v = phi[0];
    if (std::abs(v) >= 1.0) return;
    const double sigma = v < 0.0 ? -1.0 : 1.0;
    const double a = std::abs(v);
    if (use_tail && a > kBlendHi && tail_reaches(a, sigma * rem)) {
      phi = ops.tail(phi, rem);
      return;
    }
    if (use_tail && a > kSwitch) {
      // Moving inward: follow the tail down to kSwitch, then integrate.
      const double T = std::exp(log_e(a)) - std::exp(log_e(kSwitch));
      const double step = -sigma * T;
      phi = ops.tail(phi, step);
      rem -= step;
      continue;
    }
    double t = 0.0;
    const double dir = rem > 0.0 ? 1.0 : -1.0;
    double dt = dir * std::min(0.05, std::abs(rem));
    long steps = 0;
    while (dir * (rem - t) > 0.0) {
      if (dir * (t + dt - rem) > 0.0) dt = rem - t;
      const auto res = stepper.try_step(sys, phi, t, dt);
      if (res == ode::success) {
        const double p = phi[0];
        const double s2 = p < 0.0 ? -1.0 : 1.0;
        if (use_tail && std::abs(p) > kSwitch && s2 * dir > 0.0) break;
      } else if (std::abs(dt) < 1e-14 * std::max(1.0, std::abs(t))) {
        throw NonConvergence("tau flow: step size underflow");
      }
      if (++steps > 2000000) throw NonConvergence("tau flow: too many steps");
    }
    rem -= t;
    if (std::abs(rem) <= 1e-15 * std::max(1.0, std::abs(x))) return;
  }
  if (rem != 0.0 && std::abs(phi[0]) < 1.0) throw NonConvergence("tau flow: did not settle");
}

FlowOps plain_ops() {
  FlowOps ops;
  ops.field = [](const State& s, State& ds) { ds[0] = tau_field(s[0]); };
  ops.tail = [](const State& s, double c) {
    const double v = s[0];
    return v < 0.0 ? State{-tail_pos(-v, -c)} : State{tail_pos(v, c)};
  };
  return ops;
}

FlowOps jet_ops(int D, double y0) {
  auto lay = JetLayout::get({D});
  auto ctr = std::make_shared<const std::vector<double>>(std::vector<double>{y0});
  auto to_jet = [lay, ctr](const State& s) {
    std::vector<cplx> c(s.begin(), s.end());
    return Jet(lay, ctr, std::move(c));
  };
  auto to_state = [](const Jet& j) {
    State s(j.size());
    for (int i = 0; i < j.size(); ++i) s[i] = j.coeffs()[i].real();
    return s;
  };
  FlowOps ops;
  ops.field = [to_jet, to_state](const State& s, State& ds) { ds = to_state(tau_field(to_jet(s))); };
  ops.tail = [to_jet, to_state](const State& s, double c) {
    const Jet j = to_jet(s);
    return s[0] < 0.0 ? to_state(-tail_pos(-j, -c)) : to_state(tail_pos(j, c));
  };
  return ops;
}

// Derivative of a one-variable Taylor table; the top coefficient becomes invalid and is zeroed.
Jet jet_derivative_1d(const Jet& a) {
  std::vector<cplx> c(a.size(), 0.0);
  for (int j = 0; j + 1 < a.size(); ++j) c[j] = static_cast<double>(j + 1) * a.coeffs()[j + 1];
  return Jet(a.layout_ptr(), a.center_ptr(), std::move(c));
}

}  // namespace

void CompactTau::validate() const {
  if (n < 1) throw UsageError("tau dimension must be positive");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw UsageError("tau cutoff margin must be positive");
  if (!(ode_tol > 0.0) || ode_tol > 1e-3) throw UsageError("tau ODE tolerance must lie in (0, 1e-3]");
}

double tau_field(double y) {
  const double a = std::abs(y);
  if (a >= 1.0) return 0.0;
  return field_pos(a);
}

Jet tau_field(const Jet& y) {
  const double y0 = y.value().real();
  if (std::abs(y0) >= 1.0) return Jet::constant_like(y, 0.0);
  return y0 < 0.0 ? field_pos(-y) : field_pos(y);
}

double tau_chi(double y, double eps) {
  const double a = std::abs(y);
  if (a <= 1.0) return 1.0;
  return bump(1.0 + (a - 1.0) / eps);
}

Jet tau_chi(const Jet& y, double eps) { return bump_on_square(jet_mul(y, y), 1.0, 1.0 + eps); }

double tau1(double x, double y, const CompactTau& t) {
  if (std::abs(y) >= 1.0 || x == 0.0) return y;
  State s{y};
  flow(s, x, plain_ops(), t.ode_tol, t.closed_form_tail);
  return s[0];
}

std::vector<double> tau_n(const std::vector<double>& x, const std::vector<double>& y, const CompactTau& t) {
  if (static_cast<int>(x.size()) != t.n || static_cast<int>(y.size()) != t.n)
    throw UsageError("tau_n: dimension mismatch");
  double c = 1.0;
  for (double v : y) c *= tau_chi(v, t.eps);
  if (c == 0.0) return y;
  std::vector<double> out(t.n);
  for (int j = 0; j < t.n; ++j) out[j] = tau1(x[j] * c, y[j], t);
  return out;
}

std::vector<std::vector<double>> tau_taylor(double x, double y, int order, const CompactTau& t) {
  if (order < 0) throw UsageError("tau_taylor: negative order");
  std::vector<std::vector<double>> c(order + 1, std::vector<double>(order + 1, 0.0));
  if (std::abs(y) >= 1.0) {
    c[0][0] = y;
    if (order >= 1) c[0][1] = 1.0;
    return c;
  }
  State s(order + 1, 0.0);
  s[0] = y;
  if (order >= 1) s[1] = 1.0;
  if (x != 0.0) flow(s, x, jet_ops(order, y), t.ode_tol, t.closed_form_tail);
  for (int l = 0; l <= order; ++l) c[0][l] = s[l];
  if (order == 0) return c;

  auto lay = JetLayout::get({order});
  auto ctr = std::make_shared<const std::vector<double>>(std::vector<double>{y});
  const Jet T(lay, ctr, std::vector<cplx>(s.begin(), s.end()));
  const Jet w = jet_var(0, {s[0]}, {order});
  const Jet Lw = tau_field(w);
  Jet Dk = Lw;
  double kfact = 1.0;
  for (int k = 1; k <= order; ++k) {
    kfact *= k;
    std::vector<cplx> series(Dk.coeffs().begin(), Dk.coeffs().end());
    const Jet comp = compose_series(series, T);
    for (int l = 0; l + k <= order; ++l) c[k][l] = comp.coeffs()[l].real() / kfact;
    Dk = jet_mul(jet_derivative_1d(Dk), Lw);
  }
  return c;
}

double tau_partials(int k, int l, double x, double y, const CompactTau& t) {
  if (k < 0 || l < 0 || k + l > 6) throw UsageError("tau_partials: need k, l >= 0 and k + l <= 6");
  const auto c = tau_taylor(x, y, k + l, t);
  return c[k][l] * factorial(k) * factorial(l);
}

Jet tau1_on_jets(const Jet& s, const Jet& y, const CompactTau& t) {
  s.check_compatible(y);
  const double y0 = y.value().real(), s0 = s.value().real();
  if (std::abs(y0) >= 1.0) return y;
  const int D = y.layout().max_degree();
  const auto c = tau_taylor(s0, y0, D, t);
  auto own_layout = JetLayout::get({D, D});
  std::vector<cplx> own(own_layout->size(), 0.0);
  for (int k = 0; k <= D; ++k)
    for (int l = 0; k + l <= D; ++l) own[own_layout->index({k, l})] = c[k][l];
  const std::vector<Jet> h{s + cplx(-s0), y + cplx(-y0)};
  return compose_multi(own, *own_layout, h);
}

std::vector<Jet> tau_n_on_jets(std::span<const Jet> x, std::span<const Jet> y, const CompactTau& t) {
  if (static_cast<int>(x.size()) != t.n || static_cast<int>(y.size()) != t.n)
    throw UsageError("tau_n: dimension mismatch");
  std::vector<Jet> out(y.begin(), y.end());
  for (const auto& v : y)
    if (std::abs(v.value().real()) >= 1.0 + t.eps) return out;
  Jet c = Jet::constant_like(y[0], 1.0);
  for (const auto& v : y) c = jet_mul(c, tau_chi(v, t.eps));
  for (int j = 0; j < t.n; ++j) out[j] = tau1_on_jets(jet_mul(x[j], c), y[j], t);
  return out;
}

// ---- growth ---------------------------------------------------------------

std::vector<double> default_growth_grid(int count) {
  if (count < 3) throw UsageError("growth grid needs at least three points");
  std::vector<double> g;
  for (int i = 1; i < count - 1; ++i) g.push_back(-1.0 + 2.0 * i / (count - 1));
  // Clustered points 1 - 10^{-k/8} at both ends.
  for (int k = 8; k <= 40; ++k) {
    const double v = 1.0 - std::pow(10.0, -k / 8.0);
    g.push_back(v);
    g.push_back(-v);
  }
  std::sort(g.begin(), g.end());
  return g;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw UsageError("log_spaced needs 0 < lo < hi and count >= 2");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return v;
}

GrowthEntry growth_exponent_fit(int k, int l, const std::vector<double>& xs, const std::vector<double>& y_grid,
                                const CompactTau& t, Exec exec) {
  if (xs.size() < 2) throw UsageError("growth fit needs at least two x magnitudes");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!(xs[i] > 0.0) || (i > 0 && !(xs[i] > xs[i - 1])))
      throw UsageError("growth fit x magnitudes must be positive and increasing");
  if (y_grid.size() < 3) throw UsageError("growth fit needs a y grid");
  GrowthEntry e;
  e.k = k;
  e.l = l;
  e.target_exponent = l == 0 ? 0.0 : 2.0 * l + 1.0;
  e.x_min = xs.front();
  e.x_max = xs.back();
  e.sups.assign(xs.size(), 0.0);
  parallel_for(
      xs.size(),
      [&](std::size_t i) {
        const double x = xs[i];
        auto f = [&](double y) { return std::abs(tau_partials(k, l, x, y, t)); };
        std::size_t best = 0;
        double top = -1.0;
        for (std::size_t j = 0; j < y_grid.size(); ++j) {
          const double v = f(y_grid[j]);
          if (v > top) {
            top = v;
            best = j;
          }
        }
        const double lo = y_grid[best > 0 ? best - 1 : best];
        const double hi = y_grid[best + 1 < y_grid.size() ? best + 1 : best];
        if (hi > lo) {
          auto r = boost::math::tools::brent_find_minima([&](double y) { return -f(y); }, lo, hi, 40);
          top = std::max(top, -r.second);
        }
        e.sups[i] = top;
      },
      exec);
  if (*std::max_element(e.sups.begin(), e.sups.end()) < 1e-14) return e;
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    X.push_back(0.5 * std::log1p(xs[i] * xs[i]));
    Y.push_back(std::log(std::max(e.sups[i], 1e-300)));
  }
  const double n = static_cast<double>(X.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    mx += X[i] / n;
    my += Y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  e.fitted_exponent = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double r = Y[i] - (my + e.fitted_exponent * (X[i] - mx));
    ss += r * r;
  }
  e.residual = std::sqrt(ss / n);
  return e;
}

std::string growth_csv(const std::vector<GrowthEntry>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "k,l,fitted_exponent,target_exponent,residual,x_min,x_max\n";
  for (const auto& r : rows)
    os << r.k << ',' << r.l << ',' << r.fitted_exponent << ',' << r.target_exponent << ',' << r.residual << ','
       << r.x_min << ',' << r.x_max << '\n';
  return os.str();
}

// ---- action specs ---------------------------------------------------------

ActionSpec ActionSpec::translation(int n) {
  ActionSpec s;
  s.n = n;
  s.variant = TranslationAction{};
  s.validate();
  return s;
}

ActionSpec ActionSpec::phase(int n, std::vector<double> B) {
  ActionSpec s;
  s.n = n;
  s.variant = PhaseAction{std::move(B)};
  s.validate();
  return s;
}

ActionSpec ActionSpec::compact(CompactTau t) {
  ActionSpec s;
  s.n = t.n;
  s.variant = CompactAction{t};
  s.validate();
  return s;
}

void ActionSpec::validate() const {
  if (n < 1) throw UsageError("action dimension must be positive");
  if (const auto* p = std::get_if<PhaseAction>(&variant)) {
    if (static_cast<int>(p->B.size()) != n * n) throw UsageError("phase action needs an n x n matrix");
    for (double v : p->B)
      if (!std::isfinite(v)) throw UsageError("phase action matrix must be finite");
  }
  if (const auto* c = std::get_if<CompactAction>(&variant)) {
    c->tau.validate();
    if (c->tau.n != n) throw UsageError("compact action dimension mismatch");
  }
}

std::string ActionSpec::name() const {
  if (std::holds_alternative<TranslationAction>(variant)) return "translation";
  if (std::holds_alternative<PhaseAction>(variant)) return "phase";
  return "compact";
}

namespace {

// Linear form sum_b c_b y_b on jets.
Jet linear_on(std::span<const Jet> y, const std::vector<double>& c) {
  Jet acc = Jet::constant_like(y[0], 0.0);
  for (std::size_t b = 0; b < c.size(); ++b)
    if (c[b] != 0.0) acc += y[b] * cplx(c[b]);
  return acc;
}

}  // namespace

SymbolFn act(const ActionSpec& spec, const std::vector<double>& x, const SymbolFn& f) {
  spec.validate();
  const int n = spec.n;
  if (f.k != n) throw UsageError("action dimension does not match the symbol domain");
  if (static_cast<int>(x.size()) != n) throw UsageError("action parameter has wrong dimension");
  if (std::holds_alternative<TranslationAction>(spec.variant)) return translate_pullback(f, x);

  SymbolFn g = f;
  g.separable.reset();
  if (const auto* p = std::get_if<PhaseAction>(&spec.variant)) {
    // (x, B y) = sum_b (x^T B)_b y_b
    std::vector<double> c(n, 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) c[b] += x[a] * p->B[a * n + b];
    g.jets = [f, c](std::span<const Jet> in) {
      const Jet ph = jet_apply_unary(Elementary::Exp, linear_on(in, c) * cplx(0.0, 1.0));
      auto out = f.on_jets(in);
      for (auto& o : out) o = jet_mul(ph, o);
      return out;
    };
    g.plain = [f, c](std::span<const double> y, std::span<cplx> out) {
      double s = 0.0;
      for (std::size_t b = 0; b < c.size(); ++b) s += c[b] * y[b];
      f.eval_into(y, out);
      const cplx ph(std::cos(s), std::sin(s));
      for (auto& o : out) o *= ph;
    };
    return g;
  }
  const CompactTau tau = std::get<CompactAction>(spec.variant).tau;
  g.jets = [f, tau, x](std::span<const Jet> in) {
    for (const auto& v : in)
      if (std::abs(v.value().real()) >= 1.0 + tau.eps) return f.on_jets(in);
    std::vector<Jet> xs;
    for (double v : x) xs.push_back(Jet::constant_like(in[0], v));
    const auto moved = tau_n_on_jets(xs, in, tau);
    return f.on_jets(moved);
  };
  g.plain = [f, tau, x](std::span<const double> y, std::span<cplx> out) {
    for (double v : y)
      if (std::abs(v) >= 1.0 + tau.eps) return f.eval_into(y, out);
    const auto moved = tau_n(x, std::vector<double>(y.begin(), y.end()), tau);
    f.eval_into(moved, out);
  };
  return g;
}

SymbolFn orbit_symbol(const ActionSpec& spec, const SymbolFn& f, const std::vector<double>& y,
                      const std::vector<double>& A, int m) {
  spec.validate();
  const int n = spec.n;
  if (f.k != n || static_cast<int>(y.size()) != n) throw UsageError("orbit: dimension mismatch");
  if (m < 1 || static_cast<int>(A.size()) != n * m) throw UsageError("orbit: parameter matrix has wrong size");
  SymbolFn g;
  g.k = m;
  g.d = f.d;
  g.system = f.system;
  auto params = [A, n, m](std::span<const Jet> p) {
    std::vector<Jet> xs;
    for (int a = 0; a < n; ++a) xs.push_back(linear_on(p, std::vector<double>(A.begin() + a * m, A.begin() + (a + 1) * m)));
    return xs;
  };
  auto params_plain = [A, n, m](std::span<const double> p) {
    std::vector<double> xs(n, 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < m; ++b) xs[a] += A[a * m + b] * p[b];
    return xs;
  };
  if (std::holds_alternative<TranslationAction>(spec.variant)) {
    g.jets = [f, y, params](std::span<const Jet> p) {
      auto xs = params(p);
      for (std::size_t a = 0; a < xs.size(); ++a) xs[a] += y[a];
      return f.on_jets(xs);
    };
    g.plain = [f, y, params_plain](std::span<const double> p, std::span<cplx> out) {
      auto xs = params_plain(p);
      for (std::size_t a = 0; a < xs.size(); ++a) xs[a] += y[a];
      f.eval_into(xs, out);
    };
    // The orbit of a translation keeps the order of f but loses decay along ker A.
    for (const auto& [q, mr] : f.profile.entries) g.profile.entries[q] = {std::max(0.0, mr.first), 0.0};
    return g;
  }
  const auto fy = f.eval(y);
  if (const auto* ph = std::get_if<PhaseAction>(&spec.variant)) {
    // e^{i (A p, B y)} f(y): a plane wave in p.
    std::vector<double> By(n, 0.0), c(m, 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) By[a] += ph->B[a * n + b] * y[b];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < m; ++b) c[b] += A[a * m + b] * By[a];
    g.jets = [fy, c](std::span<const Jet> p) {
      const Jet e = jet_apply_unary(Elementary::Exp, linear_on(p, c) * cplx(0.0, 1.0));
      std::vector<Jet> out;
      for (cplx v : fy) out.push_back(e * v);
      return out;
    };
    g.plain = [fy, c](std::span<const double> p, std::span<cplx> out) {
      double s = 0.0;
      for (std::size_t b = 0; b < c.size(); ++b) s += c[b] * p[b];
      const cplx e(std::cos(s), std::sin(s));
      for (std::size_t i = 0; i < fy.size(); ++i) out[i] = e * fy[i];
    };
    // Derivatives of a plane wave grow with |c| but not with |p|.
    g.profile = OrderProfile::uniform(g.system, 0.0, 0.0);
    return g;
  }
  const CompactTau tau = std::get<CompactAction>(spec.variant).tau;
  bool outside = false;
  for (double v : y) outside = outside || std::abs(v) >= 1.0 + tau.eps;
  if (outside) {
    g.jets = [fy](std::span<const Jet> p) {
      std::vector<Jet> out;
      for (cplx v : fy) out.push_back(Jet::constant_like(p[0], v));
      return out;
    };
    g.plain = [fy](std::span<const double>, std::span<cplx> out) { std::copy(fy.begin(), fy.end(), out.begin()); };
  } else {
    g.jets = [f, tau, y, params](std::span<const Jet> p) {
      const auto xs = params(p);
      std::vector<Jet> ys;
      for (double v : y) ys.push_back(Jet::constant_like(p[0], v));
      return f.on_jets(tau_n_on_jets(xs, ys, tau));
    };
    g.plain = [f, tau, y, params_plain](std::span<const double> p, std::span<cplx> out) {
      f.eval_into(tau_n(params_plain(p), y, tau), out);
    };
  }
  // x-derivatives of tau_x(y) stay bounded (they decay along the flow), so the orbit is of order 0.
  g.profile = OrderProfile::uniform(g.system, 0.0, 0.0);
  return g;
}

OrderProfile action_order_profile(const ActionSpec& spec, const OrderProfile& base, int max_order) {
  spec.validate();
  if (max_order < 0) throw UsageError("max_order must be non-negative");
  OrderProfile out;
  for (const auto& [q, mr] : base.entries)
    for (int k = 0; k <= max_order; ++k) {
      double m = 0.0;
      if (std::holds_alternative<TranslationAction>(spec.variant))
        m = std::abs(mr.first - mr.second * k);
      else if (std::holds_alternative<PhaseAction>(spec.variant))
        m = k;
      else
        m = static_cast<double>(k) * (k + 2);  // sum_{l=1}^k (2l + 1)
      out.entries[q + "," + std::to_string(k)] = {m, 0.0};
    }
  return out;
}

}  // namespace rdq

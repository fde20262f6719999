#include "rdq/symbols.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <sstream>

#include "rdq/errors.hpp"

namespace rdq {

// ---- seminorms and profiles ----------------------------------------------

double Seminorm::operator()(std::span<const cplx> v) const {
  if (v.size() != weights.size()) throw UsageError("seminorm '" + name + "' applied to a vector of wrong length");
  double r = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) r = std::max(r, weights[j] * std::abs(v[j]));
  return r;
}

SeminormSystem SeminormSystem::max_abs(int d, const std::string& name) {
  return SeminormSystem{{Seminorm{name, std::vector<double>(d, 1.0)}}};
}

const Seminorm& SeminormSystem::find(const std::string& name) const {
  for (const auto& s : entries)
    if (s.name == name) return s;
  throw UsageError("unknown seminorm '" + name + "'");
}

bool SeminormSystem::contains(const std::string& name) const {
  return std::any_of(entries.begin(), entries.end(), [&](const Seminorm& s) { return s.name == name; });
}

void SeminormSystem::validate(int d) const {
  if (entries.empty()) throw UsageError("seminorm system is empty");
  for (const auto& s : entries) {
    if (static_cast<int>(s.weights.size()) != d) throw UsageError("seminorm '" + s.name + "' has wrong length");
    for (double w : s.weights)
      if (!(w > 0.0)) throw UsageError("seminorm '" + s.name + "' has a non-positive weight");
  }
}

OrderProfile OrderProfile::uniform(const SeminormSystem& sys, double m, double rho) {
  OrderProfile p;
  for (const auto& s : sys.entries) p.entries[s.name] = {m, rho};
  return p;
}

OrderProfile OrderProfile::schwartz(const SeminormSystem& sys) {
  return uniform(sys, -std::numeric_limits<double>::infinity(), 0.0);
}

double OrderProfile::m(const std::string& q) const {
  auto it = entries.find(q);
  if (it == entries.end()) throw UsageError("order profile has no entry for seminorm '" + q + "'");
  return it->second.first;
}

double OrderProfile::rho(const std::string& q) const {
  auto it = entries.find(q);
  if (it == entries.end()) throw UsageError("order profile has no entry for seminorm '" + q + "'");
  return it->second.second;
}

bool OrderProfile::admissible() const {
  if (entries.empty()) return false;
  for (const auto& [name, mr] : entries)
    if (!(mr.second > -1.0 && mr.second <= 1.0)) return false;
  return true;
}

bool OrderProfile::covers(const SeminormSystem& sys) const {
  for (const auto& s : sys.entries)
    if (!entries.count(s.name)) return false;
  return true;
}

bool OrderProfile::order_leq(const OrderProfile& other) const {
  for (const auto& [name, mr] : entries) {
    auto it = other.entries.find(name);
    if (it != other.entries.end() && mr.first > it->second.first) return false;
  }
  return true;
}

// ---- SymbolFn -------------------------------------------------------------

std::vector<Jet> SymbolFn::on_jets(std::span<const Jet> inputs) const {
  if (static_cast<int>(inputs.size()) != k) throw UsageError("symbol expects " + std::to_string(k) + " inputs");
  auto out = jets(inputs);
  if (static_cast<int>(out.size()) != d) throw UsageError("symbol evaluator returned wrong target dimension");
  return out;
}

std::vector<Jet> SymbolFn::eval_jet(const std::vector<double>& point, const std::vector<int>& orders) const {
  if (static_cast<int>(point.size()) != k) throw UsageError("point has wrong dimension");
  auto vars = jet_vars(point, orders);
  return on_jets(vars);
}

void SymbolFn::eval_into(std::span<const double> point, std::span<cplx> out) const {
  if (static_cast<int>(point.size()) != k) throw UsageError("point has wrong dimension");
  if (plain) {
    plain(point, out);
    return;
  }
  auto js = eval_jet(std::vector<double>(point.begin(), point.end()), std::vector<int>(k, 0));
  for (int i = 0; i < d; ++i) out[i] = js[i].value();
}

std::vector<cplx> SymbolFn::eval(std::span<const double> point) const {
  std::vector<cplx> out(d);
  eval_into(point, out);
  return out;
}

// ---- grids ----------------------------------------------------------------

GridSpec GridSpec::uniform(int k, int count, double radius) {
  GridSpec g;
  g.counts.assign(k, count);
  g.radius = radius;
  return g;
}

std::vector<double> GridSpec::axis(int a) const {
  const int c = counts.at(a);
  if (c < 1) throw UsageError("grid axis needs at least one point");
  if (!(radius > 0.0)) throw UsageError("grid radius must be positive");
  std::vector<double> x(c);
  if (c == 1) return {0.0};
  for (int i = 0; i < c; ++i) {
    const double t = -1.0 + 2.0 * i / (c - 1);
    x[i] = spacing == Spacing::Uniform ? radius * t : radius * std::tanh(2.0 * t) / std::tanh(2.0);
  }
  return x;
}

std::size_t GridSpec::total() const {
  std::size_t t = 1;
  for (int c : counts) t *= static_cast<std::size_t>(std::max(c, 0));
  return t;
}

void GridSpec::point(std::size_t flat, std::vector<double>& out) const {
  const int k = static_cast<int>(counts.size());
  out.resize(k);
  for (int a = k - 1; a >= 0; --a) {
    const std::size_t c = counts[a];
    const std::size_t i = flat % c;
    flat /= c;
    out[a] = c == 1 ? 0.0
                    : (spacing == Spacing::Uniform
                           ? radius * (-1.0 + 2.0 * double(i) / double(c - 1))
                           : radius * std::tanh(2.0 * (-1.0 + 2.0 * double(i) / double(c - 1))) / std::tanh(2.0));
  }
}

namespace {

double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void check_grid(const GridSpec& g, int k) {
  if (static_cast<int>(g.counts.size()) != k) throw UsageError("grid dimension does not match symbol dimension");
  if (g.total() == 0) throw UsageError("empty grid");
  if (!(g.radius > 0.0)) throw UsageError("grid radius must be positive");
}

double weight(double x2, double expo) { return std::pow(1.0 + x2, -0.5 * expo); }

std::vector<MultiIndex> indices_up_to(int k, int L) {
  std::vector<MultiIndex> out;
  auto lay = JetLayout::get(std::vector<int>(k, L));
  for (int i = 0; i < lay->size(); ++i)
    if (lay->degree(i) <= L) out.push_back(lay->multi(i));
  return out;
}

// Per-value maxima over the grid, split into the inner ball |x| <= R/2 and all points.
struct ShellMax {
  std::vector<double> inner, all;
};

ShellMax grid_shell_max(const GridSpec& g, int nvals,
                        const std::function<void(const std::vector<double>&, std::vector<double>&)>& f, Exec exec) {
  const std::size_t total = g.total();
  const std::size_t chunks = std::min<std::size_t>(total, 256);
  std::vector<ShellMax> part(chunks, ShellMax{std::vector<double>(nvals, 0.0), std::vector<double>(nvals, 0.0)});
  const double half2 = 0.25 * g.radius * g.radius * (1.0 + 1e-12);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        std::vector<double> x, vals(nvals);
        const std::size_t lo = total * c / chunks, hi = total * (c + 1) / chunks;
        for (std::size_t i = lo; i < hi; ++i) {
          g.point(i, x);
          f(x, vals);
          const bool inner = norm2(x) <= half2;
          for (int v = 0; v < nvals; ++v) {
            part[c].all[v] = std::max(part[c].all[v], vals[v]);
            if (inner) part[c].inner[v] = std::max(part[c].inner[v], vals[v]);
          }
        }
      },
      exec);
  ShellMax r{std::vector<double>(nvals, 0.0), std::vector<double>(nvals, 0.0)};
  for (const auto& p : part)
    for (int v = 0; v < nvals; ++v) {
      r.all[v] = std::max(r.all[v], p.all[v]);
      r.inner[v] = std::max(r.inner[v], p.inner[v]);
    }
  return r;
}

bool growth_flag(double inner, double all, double radius) {
  if (all <= 0.0) return false;
  if (inner <= 0.0) return true;
  const double base = 0.5 * std::log((1.0 + radius * radius) / (1.0 + 0.25 * radius * radius));
  return std::log(all / inner) / base > kGrowthFlagExponent;
}

std::vector<cplx> partials_at(const std::vector<Jet>& js, int idx, double fact) {
  std::vector<cplx> v(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) v[i] = fact * js[i].coeffs()[idx];
  return v;
}

}  // namespace

// ---- builders -------------------------------------------------------------

namespace {

expr::NodePtr rename_p_to_x(const expr::NodePtr& n) {
  auto c = std::make_shared<expr::Node>(*n);
  if (c->kind == expr::Node::Kind::Var) c->var_kind = 'x';
  for (auto& k : c->kids) k = rename_p_to_x(k);
  return c;
}

SymbolFn scalar_from_program(expr::Program prog, int k, double m, double rho) {
  SymbolFn f;
  f.k = k;
  f.d = 1;
  f.jets = [prog](std::span<const Jet> in) { return std::vector<Jet>{prog.eval_jets(in)}; };
  f.plain = [prog](std::span<const double> x, std::span<cplx> out) { out[0] = prog.eval(x); };
  f.system = SeminormSystem::max_abs(1);
  f.profile = OrderProfile::uniform(f.system, m, rho);
  return f;
}

}  // namespace

SymbolFn symbol_from_expr(const expr::Expr& e, const expr::VarLayout& lay, double m, double rho) {
  SymbolFn f = scalar_from_program(expr::Program(e, lay), lay.dim(), m, rho);
  if (lay.with_p) {
    auto terms = expr::separate_px(e);
    if (!terms.empty()) {
      auto form = std::make_shared<SeparableForm>();
      form->n = lay.n;
      const expr::VarLayout half{lay.n, false};
      for (const auto& t : terms) {
        SeparableTerm st;
        st.u = scalar_from_program(expr::Program(expr::Expr(rename_p_to_x(t.p_part)), half), lay.n, m, rho);
        st.v = scalar_from_program(expr::Program(expr::Expr(t.x_part), half), lay.n, m, rho);
        form->terms.push_back(std::move(st));
      }
      f.separable = form;
    }
  }
  return f;
}

SymbolFn symbol_from_expr(const std::string& text, const expr::VarLayout& lay, double m, double rho) {
  return symbol_from_expr(expr::parse_or_throw(text), lay, m, rho);
}

SymbolFn symbol_from_exprs(const std::vector<expr::Expr>& es, const expr::VarLayout& lay, const SeminormSystem& sys,
                           const OrderProfile& prof) {
  if (es.empty()) throw UsageError("need at least one component expression");
  std::vector<expr::Program> progs;
  for (const auto& e : es) progs.emplace_back(e, lay);
  sys.validate(static_cast<int>(es.size()));
  if (!prof.covers(sys)) throw UsageError("order profile does not cover the seminorm system");
  SymbolFn f;
  f.k = lay.dim();
  f.d = static_cast<int>(es.size());
  f.jets = [progs](std::span<const Jet> in) {
    std::vector<Jet> out;
    for (const auto& p : progs) out.push_back(p.eval_jets(in));
    return out;
  };
  f.plain = [progs](std::span<const double> x, std::span<cplx> out) {
    for (std::size_t i = 0; i < progs.size(); ++i) out[i] = progs[i].eval(x);
  };
  f.system = sys;
  f.profile = prof;
  return f;
}

SymbolFn constant_symbol(int k, std::vector<cplx> value) {
  SymbolFn f;
  f.k = k;
  f.d = static_cast<int>(value.size());
  f.jets = [value](std::span<const Jet> in) {
    std::vector<Jet> out;
    for (cplx v : value) out.push_back(Jet::constant_like(in[0], v));
    return out;
  };
  f.plain = [value](std::span<const double>, std::span<cplx> out) {
    for (std::size_t i = 0; i < value.size(); ++i) out[i] = value[i];
  };
  f.system = SeminormSystem::max_abs(f.d);
  f.profile = OrderProfile::uniform(f.system, 0.0, 0.0);
  if (k >= 2 && k % 2 == 0) {
    auto form = std::make_shared<SeparableForm>();
    form->n = k / 2;
    form->terms.push_back({constant_symbol(k / 2, {1.0}), constant_symbol(k / 2, value)});
    f.separable = form;
  }
  return f;
}

SymbolFn with_profile(SymbolFn f, OrderProfile prof) {
  if (!prof.covers(f.system)) throw UsageError("order profile does not cover the seminorm system");
  f.profile = std::move(prof);
  return f;
}

SymbolFn with_schwartz_profile(SymbolFn f) {
  f.profile = OrderProfile::schwartz(f.system);
  return f;
}

// ---- estimates ------------------------------------------------------------

double seminorm_estimate(const SymbolFn& F, const std::string& q, const MultiIndex& mu, double m, double rho,
                         const GridSpec& grid, Exec exec) {
  check_grid(grid, F.k);
  if (static_cast<int>(mu.size()) != F.k) throw UsageError("multi-index has wrong dimension");
  const Seminorm& sn = F.system.find(q);
  const double expo = m - rho * order_of(mu);
  const double fact = multi_factorial(mu);
  auto lay = JetLayout::get(mu);
  const int idx = lay->index(mu);
  return reduce_max(
      grid.total(),
      [&](std::size_t i) {
        std::vector<double> x;
        grid.point(i, x);
        auto js = F.eval_jet(x, mu);
        return weight(norm2(x), expo) * sn(partials_at(js, idx, fact));
      },
      exec);
}

std::vector<SymbolCheckEntry> check_symbol(const SymbolFn& F, int L, const GridSpec& grid, Exec exec) {
  if (L < 0) throw UsageError("derivative order bound must be non-negative");
  check_grid(grid, F.k);
  const auto mus = indices_up_to(F.k, L);
  const int nq = static_cast<int>(F.system.entries.size());
  const int nvals = nq * static_cast<int>(mus.size());
  const std::vector<int> orders(F.k, L);
  auto lay = JetLayout::get(orders);
  std::vector<int> idx;
  std::vector<double> facts;
  for (const auto& mu : mus) {
    idx.push_back(lay->index(mu));
    facts.push_back(multi_factorial(mu));
  }
  auto shell = grid_shell_max(
      grid, nvals,
      [&](const std::vector<double>& x, std::vector<double>& vals) {
        auto js = F.eval_jet(x, orders);
        const double x2 = norm2(x);
        for (int qi = 0; qi < nq; ++qi) {
          const auto& sn = F.system.entries[qi];
          const double m = F.profile.m(sn.name), rho = F.profile.rho(sn.name);
          for (std::size_t u = 0; u < mus.size(); ++u)
            vals[qi * mus.size() + u] =
                weight(x2, m - rho * order_of(mus[u])) * sn(partials_at(js, idx[u], facts[u]));
        }
      },
      exec);
  std::vector<SymbolCheckEntry> out;
  for (int qi = 0; qi < nq; ++qi) {
    const auto& name = F.system.entries[qi].name;
    for (std::size_t u = 0; u < mus.size(); ++u) {
      const int v = qi * static_cast<int>(mus.size()) + static_cast<int>(u);
      out.push_back({name, mus[u], F.profile.m(name), F.profile.rho(name), shell.all[v],
                     growth_flag(shell.inner[v], shell.all[v], grid.radius)});
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<SymbolCheckEntry>& report) {
  std::ostringstream os;
  for (const auto& e : report) {
    nlohmann::ordered_json j;
    j["seminorm"] = e.seminorm;
    j["mu"] = e.mu;
    j["m"] = std::isfinite(e.m) ? nlohmann::ordered_json(e.m) : nlohmann::ordered_json("-inf");
    j["rho"] = e.rho;
    j["estimate"] = e.estimate;
    j["diverging"] = e.diverging;
    os << j.dump() << "\n";
  }
  return os.str();
}

SchwartzEstimate schwartz_seminorm(const SymbolFn& F, int m, const MultiIndex& mu, const GridSpec& grid,
                                   const std::string& q, Exec exec) {
  check_grid(grid, F.k);
  if (m < 0) throw UsageError("Schwartz weight exponent must be non-negative");
  const Seminorm& sn = q.empty() ? F.system.entries.at(0) : F.system.find(q);
  const double fact = multi_factorial(mu);
  auto lay = JetLayout::get(mu);
  const int idx = lay->index(mu);
  auto shell = grid_shell_max(
      grid, 1,
      [&](const std::vector<double>& x, std::vector<double>& vals) {
        auto js = F.eval_jet(x, mu);
        vals[0] = std::pow(1.0 + norm2(x), 0.5 * m) * sn(partials_at(js, idx, fact));
      },
      exec);
  return {shell.all[0], growth_flag(shell.inner[0], shell.all[0], grid.radius)};
}

bool schwartz_certified(const SymbolFn& F, int M, int L, const GridSpec& grid) {
  for (int m = 0; m <= M; ++m)
    for (const auto& mu : indices_up_to(F.k, L))
      for (const auto& sn : F.system.entries)
        if (schwartz_seminorm(F, m, mu, grid, sn.name).diverging) return false;
  return true;
}

// ---- calculus -------------------------------------------------------------

namespace {

std::vector<double> real_centers(std::span<const Jet> in) {
  std::vector<double> c(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) c[i] = in[i].value().real();
  return c;
}

// Shift a table at orders (o + nu) to the jet of the nu-th derivative at orders o.
std::vector<cplx> shift_table(const Jet& own, const JetLayout& target, const MultiIndex& nu) {
  std::vector<cplx> out(target.size());
  const int k = target.dim();
  for (int idx = 0; idx < target.size(); ++idx) {
    MultiIndex a = target.multi(idx);
    double f = 1.0;
    for (int i = 0; i < k; ++i) {
      for (int t = 1; t <= nu[i]; ++t) f *= a[i] + t;
      a[i] += nu[i];
    }
    out[idx] = f * own.coeff(a);
  }
  return out;
}

}  // namespace

SymbolFn differentiate(const SymbolFn& F, const MultiIndex& nu) {
  if (static_cast<int>(nu.size()) != F.k) throw UsageError("derivative multi-index has wrong dimension");
  for (int v : nu)
    if (v < 0) throw UsageError("derivative multi-index must be non-negative");
  SymbolFn G;
  G.k = F.k;
  G.d = F.d;
  G.system = F.system;
  const int nn = order_of(nu);
  for (const auto& [name, mr] : F.profile.entries) G.profile.entries[name] = {mr.first - mr.second * nn, mr.second};
  G.jets = [F, nu](std::span<const Jet> in) {
    const int k = F.k;
    if (are_coordinate_jets(in)) {
      const auto& tl = in[0].layout();
      std::vector<int> ord = tl.orders();
      for (int i = 0; i < k; ++i) ord[i] += nu[i];
      auto own = F.eval_jet(in[0].center(), ord);
      std::vector<Jet> out;
      for (const auto& o : own) out.emplace_back(in[0].layout_ptr(), in[0].center_ptr(), shift_table(o, tl, nu));
      return out;
    }
    const int D = in[0].layout().max_degree();
    const auto u0 = real_centers(in);
    std::vector<int> ord(k, D);
    auto target = JetLayout::get(ord);
    for (int i = 0; i < k; ++i) ord[i] += nu[i];
    auto own = F.eval_jet(u0, ord);
    std::vector<Jet> h(in.begin(), in.end());
    for (auto& j : h) j.coeffs()[0] = 0.0;
    std::vector<Jet> out;
    for (const auto& o : own) out.push_back(compose_multi(shift_table(o, *target, nu), *target, h));
    return out;
  };
  if (F.separable && 2 * F.separable->n == F.k) {
    const int n = F.separable->n;
    const MultiIndex nu_p(nu.begin(), nu.begin() + n), nu_x(nu.begin() + n, nu.end());
    auto form = std::make_shared<SeparableForm>();
    form->n = n;
    for (const auto& t : F.separable->terms)
      form->terms.push_back({differentiate(t.u, nu_p), differentiate(t.v, nu_x)});
    G.separable = form;
  }
  return G;
}

BilinearPairing BilinearPairing::scalar() {
  BilinearPairing p;
  p.c = {1.0};
  p.target = SeminormSystem::max_abs(1);
  return p;
}

double BilinearPairing::continuity_constant(const Seminorm& r, const Seminorm& q, const Seminorm& qp) const {
  double c = 0.0;
  for (int k = 0; k < d3; ++k) {
    double s = 0.0;
    for (int i = 0; i < d1; ++i)
      for (int j = 0; j < d2; ++j) s += std::abs(coeff(k, i, j)) / (q.weights[i] * qp.weights[j]);
    c = std::max(c, r.weights[k] * s);
  }
  return c;
}

namespace {

const Seminorm& matching(const SeminormSystem& sys, const std::string& name) {
  if (sys.contains(name)) return sys.find(name);
  if (sys.entries.size() == 1) return sys.entries[0];
  throw UsageError("no seminorm matching '" + name + "'");
}

std::vector<Jet> pair_jets(const BilinearPairing& mu, const std::vector<Jet>& a, const std::vector<Jet>& b) {
  std::vector<Jet> out;
  for (int k = 0; k < mu.d3; ++k) {
    Jet acc = Jet::constant_like(a[0], 0.0);
    for (int i = 0; i < mu.d1; ++i)
      for (int j = 0; j < mu.d2; ++j) {
        const cplx c = mu.coeff(k, i, j);
        if (c != cplx(0.0)) acc += jet_mul(a[i], b[j]) * c;
      }
    out.push_back(std::move(acc));
  }
  return out;
}

void check_pairing(const BilinearPairing& mu, const SymbolFn& F, const SymbolFn& G) {
  if (mu.d1 != F.d || mu.d2 != G.d) throw UsageError("pairing dimensions do not match the symbols");
  if (static_cast<int>(mu.c.size()) != mu.d1 * mu.d2 * mu.d3) throw UsageError("pairing coefficient table has wrong size");
  mu.target.validate(mu.d3);
}

}  // namespace

SymbolFn pointwise_product(const SymbolFn& F, const SymbolFn& G, const BilinearPairing& mu) {
  if (F.k != G.k) throw UsageError("pointwise product needs equal domain dimensions");
  check_pairing(mu, F, G);
  SymbolFn H;
  H.k = F.k;
  H.d = mu.d3;
  H.system = mu.target;
  for (const auto& r : mu.target.entries) {
    const auto& q = matching(F.system, r.name);
    const auto& qp = matching(G.system, r.name);
    H.profile.entries[r.name] = {F.profile.m(q.name) + G.profile.m(qp.name),
                                 std::min(F.profile.rho(q.name), G.profile.rho(qp.name))};
  }
  H.jets = [F, G, mu](std::span<const Jet> in) { return pair_jets(mu, F.on_jets(in), G.on_jets(in)); };
  if (F.plain && G.plain) {
    H.plain = [F, G, mu](std::span<const double> x, std::span<cplx> out) {
      auto a = F.eval(x);
      auto b = G.eval(x);
      for (int k = 0; k < mu.d3; ++k) {
        cplx s = 0.0;
        for (int i = 0; i < mu.d1; ++i)
          for (int j = 0; j < mu.d2; ++j) s += mu.coeff(k, i, j) * a[i] * b[j];
        out[k] = s;
      }
    };
  }
  if (F.separable && G.separable && F.separable->n == G.separable->n) {
    auto form = std::make_shared<SeparableForm>();
    form->n = F.separable->n;
    for (const auto& a : F.separable->terms)
      for (const auto& b : G.separable->terms)
        form->terms.push_back({pointwise_product(a.u, b.u), pointwise_product(a.v, b.v, mu)});
    H.separable = form;
  }
  return H;
}

SymbolFn outer_product(const SymbolFn& F, const SymbolFn& G, const BilinearPairing& mu) {
  check_pairing(mu, F, G);
  SymbolFn H;
  H.k = F.k + G.k;
  H.d = mu.d3;
  H.system = mu.target;
  for (const auto& r : mu.target.entries) {
    const auto& q = matching(F.system, r.name);
    const auto& qp = matching(G.system, r.name);
    const double m = F.profile.m(q.name), mp = G.profile.m(qp.name);
    H.profile.entries[r.name] = {std::max({m, mp, m + mp}),
                                 std::min({0.0, F.profile.rho(q.name), G.profile.rho(qp.name)})};
  }
  H.jets = [F, G, mu](std::span<const Jet> in) {
    return pair_jets(mu, F.on_jets(in.subspan(0, F.k)), G.on_jets(in.subspan(F.k)));
  };
  H.plain = [F, G, mu](std::span<const double> x, std::span<cplx> out) {
    auto a = F.eval(x.subspan(0, F.k));
    auto b = G.eval(x.subspan(F.k));
    for (int k = 0; k < mu.d3; ++k) {
      cplx s = 0.0;
      for (int i = 0; i < mu.d1; ++i)
        for (int j = 0; j < mu.d2; ++j) s += mu.coeff(k, i, j) * a[i] * b[j];
      out[k] = s;
    }
  };
  return H;
}

double LinearMapSpec::constant(const Seminorm& qp, const Seminorm& q) const {
  double c = 0.0;
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols; ++j) s += std::abs(A[i * cols + j]) / q.weights[j];
    c = std::max(c, qp.weights[i] * s);
  }
  return c;
}

SymbolFn apply_linear(const LinearMapSpec& A, const SymbolFn& F) {
  if (A.cols != F.d) throw UsageError("linear map source dimension does not match the symbol");
  if (static_cast<int>(A.A.size()) != A.rows * A.cols) throw UsageError("linear map matrix has wrong size");
  A.target.validate(A.rows);
  if (!A.target_profile.covers(A.target)) throw UsageError("target profile does not cover the target seminorms");
  for (const auto& qp : A.target.entries) {
    auto it = A.source_of.find(qp.name);
    const Seminorm& q = it != A.source_of.end() ? F.system.find(it->second) : matching(F.system, qp.name);
    if (F.profile.m(q.name) > A.target_profile.m(qp.name) || F.profile.rho(q.name) < A.target_profile.rho(qp.name))
      throw UsageError("incompatible profiles for seminorm '" + qp.name + "': need m <= m' and rho >= rho'");
  }
  SymbolFn H;
  H.k = F.k;
  H.d = A.rows;
  H.system = A.target;
  H.profile = A.target_profile;
  H.jets = [F, A](std::span<const Jet> in) {
    auto v = F.on_jets(in);
    std::vector<Jet> out;
    for (int i = 0; i < A.rows; ++i) {
      Jet acc = Jet::constant_like(v[0], 0.0);
      for (int j = 0; j < A.cols; ++j)
        if (A.A[i * A.cols + j] != cplx(0.0)) acc += v[j] * A.A[i * A.cols + j];
      out.push_back(std::move(acc));
    }
    return out;
  };
  H.plain = [F, A](std::span<const double> x, std::span<cplx> out) {
    auto v = F.eval(x);
    for (int i = 0; i < A.rows; ++i) {
      cplx s = 0.0;
      for (int j = 0; j < A.cols; ++j) s += A.A[i * A.cols + j] * v[j];
      out[i] = s;
    }
  };
  return H;
}

SymbolFn scalar_power(const SymbolFn& f, cplx alpha) {
  if (f.d != 1) throw UsageError("scalar_power needs a scalar symbol");
  if (alpha.real() < 0.0) throw UsageError("scalar_power requires Re(alpha) >= 0");
  SymbolFn g;
  g.k = f.k;
  g.d = 1;
  g.system = f.system;
  for (const auto& [name, mr] : f.profile.entries)
    g.profile.entries[name] = {alpha.real() == 0.0 ? 0.0 : alpha.real() * mr.first, mr.second};
  auto branch_msg = [](std::span<const double> x) {
    std::ostringstream os;
    os << "scalar_power: value on the branch cut at point (";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ")";
    return os.str();
  };
  g.jets = [f, alpha, branch_msg](std::span<const Jet> in) {
    Jet v = f.on_jets(in)[0];
    const cplx v0 = v.value();
    if (v0.imag() == 0.0 && v0.real() <= 0.0) throw DomainError(branch_msg(in[0].center()));
    return std::vector<Jet>{jet_apply_unary(Elementary::Exp, jet_apply_unary(Elementary::Log, v) * alpha)};
  };
  g.plain = [f, alpha, branch_msg](std::span<const double> x, std::span<cplx> out) {
    const cplx v0 = f.eval(x)[0];
    if (v0.imag() == 0.0 && v0.real() <= 0.0) throw DomainError(branch_msg(x));
    out[0] = std::exp(alpha * std::log(v0));
  };
  return g;
}

namespace {

double b_fn(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

Jet b_jet(const Jet& u) {
  return jet_apply_unary(Elementary::Exp, -jet_apply_unary(Elementary::Reciprocal, u));
}

}  // namespace

double bump(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double a = b_fn(2.0 - r), b = b_fn(r - 1.0);
  return a / (a + b);
}

Jet bump_on_square(const Jet& r2, double r_in, double r_out) {
  const double s0 = r2.value().real();
  const double r0 = std::sqrt(std::max(s0, 0.0));
  if (r0 <= r_in) return Jet::constant_like(r2, 1.0);
  if (r0 >= r_out) return Jet::constant_like(r2, 0.0);
  const Jet r = jet_apply_unary(Elementary::Power, r2, 0.5);
  const double w = r_out - r_in;
  const Jet t = (r + cplx(-r_in)) * cplx(1.0 / w);
  const Jet a = b_jet(Jet::constant_like(r2, 1.0) - t);
  const Jet b = b_jet(t);
  return jet_div(a, a + b);
}

SymbolFn cutoff_mollify(const SymbolFn& F, double eps, const std::vector<double>& shift) {
  if (!(eps > 0.0)) throw UsageError("cutoff scale must be positive");
  if (static_cast<int>(shift.size()) != F.k) throw UsageError("cutoff shift has wrong dimension");
  SymbolFn G = F;
  G.separable.reset();
  G.jets = [F, eps, shift](std::span<const Jet> in) {
    Jet r2 = Jet::constant_like(in[0], 0.0);
    for (int i = 0; i < F.k; ++i) {
      Jet z = (in[i] + cplx(-shift[i])) * cplx(eps);
      r2 += jet_mul(z, z);
    }
    const Jet chi = bump_on_square(r2);
    auto out = F.on_jets(in);
    for (auto& o : out) o = jet_mul(chi, o);
    return out;
  };
  G.plain = [F, eps, shift](std::span<const double> x, std::span<cplx> out) {
    double r2 = 0.0;
    for (int i = 0; i < F.k; ++i) r2 += (eps * (x[i] - shift[i])) * (eps * (x[i] - shift[i]));
    const double chi = bump(std::sqrt(r2));
    if (chi == 0.0) {
      for (auto& o : out) o = 0.0;
      return;
    }
    F.eval_into(x, out);
    for (auto& o : out) o *= chi;
  };
  return G;
}

double cutoff_support_radius(double eps, const std::vector<double>& shift) {
  return 2.0 / eps + std::sqrt(norm2(shift));
}

SymbolFn translate_pullback(const SymbolFn& F, const std::vector<double>& y) {
  if (static_cast<int>(y.size()) != F.k) throw UsageError("translation vector has wrong dimension");
  SymbolFn G = F;
  G.separable.reset();
  G.jets = [F, y](std::span<const Jet> in) {
    std::vector<Jet> s(in.begin(), in.end());
    for (int i = 0; i < F.k; ++i) s[i] += y[i];
    return F.on_jets(s);
  };
  G.plain = [F, y](std::span<const double> x, std::span<cplx> out) {
    std::vector<double> s(x.begin(), x.end());
    for (int i = 0; i < F.k; ++i) s[i] += y[i];
    F.eval_into(s, out);
  };
  return G;
}

SymbolFn gl_pullback(const SymbolFn& F, const std::vector<double>& A) {
  const int k = F.k;
  if (static_cast<int>(A.size()) != k * k) throw UsageError("matrix has wrong size");
  Eigen::MatrixXd M(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) M(i, j) = A[i * k + j];
  const double det = M.determinant();
  if (!(std::abs(det) > 1e-14 * std::max(1.0, M.norm()))) throw UsageError("gl_pullback: matrix is singular");
  SymbolFn G = F;
  G.separable.reset();
  G.jets = [F, A, k](std::span<const Jet> in) {
    std::vector<Jet> s;
    for (int i = 0; i < k; ++i) {
      Jet acc = Jet::constant_like(in[0], 0.0);
      for (int j = 0; j < k; ++j)
        if (A[i * k + j] != 0.0) acc += in[j] * cplx(A[i * k + j]);
      s.push_back(std::move(acc));
    }
    return F.on_jets(s);
  };
  G.plain = [F, A, k](std::span<const double> x, std::span<cplx> out) {
    std::vector<double> s(k, 0.0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) s[i] += A[i * k + j] * x[j];
    F.eval_into(s, out);
  };
  return G;
}

CurriedSymbol curry(const SymbolFn& F, int k1) {
  if (k1 < 0 || k1 > F.k) throw UsageError("curry split out of range");
  for (const auto& [name, mr] : F.profile.entries)
    if (mr.second < 0.0) throw UsageError("curry requires a non-negative type");
  CurriedSymbol C;
  C.k1 = k1;
  C.k2 = F.k - k1;
  for (const auto& [name, mr] : F.profile.entries) C.induced.entries[name] = {std::max(0.0, mr.first), mr.second};
  C.slice = [F, k1](const std::vector<double>& x1) {
    if (static_cast<int>(x1.size()) != k1) throw UsageError("slice point has wrong dimension");
    SymbolFn S;
    S.k = F.k - k1;
    S.d = F.d;
    S.system = F.system;
    S.profile = F.profile;
    S.jets = [F, x1](std::span<const Jet> in) {
      std::vector<Jet> all;
      for (double v : x1) all.push_back(Jet::constant_like(in[0], v));
      all.insert(all.end(), in.begin(), in.end());
      return F.on_jets(all);
    };
    S.plain = [F, x1](std::span<const double> x2, std::span<cplx> out) {
      std::vector<double> all(x1);
      all.insert(all.end(), x2.begin(), x2.end());
      F.eval_into(all, out);
    };
    return S;
  };
  return C;
}

double curried_seminorm_estimate(const CurriedSymbol& C, const SymbolFn& F, const std::string& q,
                                 const MultiIndex& nu, const MultiIndex& mu, const GridSpec& g1,
                                 const GridSpec& g2) {
  check_grid(g1, C.k1);
  check_grid(g2, C.k2);
  const Seminorm& sn = F.system.find(q);
  const double mh = C.induced.m(q), rh = C.induced.rho(q);
  const double m = F.profile.m(q), rho = F.profile.rho(q);
  MultiIndex full(nu);
  full.insert(full.end(), mu.begin(), mu.end());
  auto lay = JetLayout::get(full);
  const int idx = lay->index(full);
  const double fact = multi_factorial(full);
  return reduce_max(
      g1.total(),
      [&](std::size_t i1) {
        std::vector<double> x1, x2;
        g1.point(i1, x1);
        double inner = 0.0;
        for (std::size_t i2 = 0; i2 < g2.total(); ++i2) {
          g2.point(i2, x2);
          std::vector<double> x(x1);
          x.insert(x.end(), x2.begin(), x2.end());
          auto js = F.eval_jet(x, full);
          inner = std::max(inner, weight(norm2(x2), m - rho * order_of(mu)) * sn(partials_at(js, idx, fact)));
        }
        return weight(norm2(x1), mh - rh * order_of(nu)) * inner;
      },
      Exec::Parallel);
}

}  // namespace rdq

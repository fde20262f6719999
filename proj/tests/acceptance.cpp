// One line per acceptance criterion; exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rdq/deform.hpp"
#include "support/expr_gen.hpp"
#include "support/mp_eval.hpp"

using namespace rdq;

namespace {

const expr::VarLayout L1{1, false};
const expr::VarLayout L2{2, false};
const expr::VarLayout PX1{1, true};

SymbolFn sch(const std::string& s, expr::VarLayout lay = L1) { return with_schwartz_profile(symbol_from_expr(s, lay)); }
SymbolFn sym(const std::string& s) { return symbol_from_expr(s, PX1); }

struct Outcome {
  bool pass = true;
  double worst = 0.0;   // largest residual relative to its tolerance
  std::string detail;

  void check(double residual, double tol) {
    worst = std::max(worst, residual / tol);
    if (!(residual <= tol)) pass = false;
  }
};

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds; 0 for none
  std::function<Outcome()> run;
};

Outcome normalization() {
  Outcome o;
  const auto r = oscillatory_integral(sym("exp(-x1^2)"), QuadraturePlan{});
  o.check(std::abs(r.value[0] - 1.0), 1e-5);
  const auto c = oscillatory_integral(constant_symbol(2, {cplx(2.0, -1.0)}), QuadraturePlan{});
  o.check(std::abs(c.value[0] - cplx(2.0, -1.0)), 1e-6);
  return o;
}

Outcome s_independence() {
  Outcome o;
  for (const char* text : {"exp(-p1^2-x1^2)", "(1+0.5*i)*exp(-(p1-0.5)^2-x1^2)", "x1*p1*exp(-p1^2-3*x1^2)",
                           "exp(-x1^2)", "cos(p1)*exp(-x1^2)"})
    for (int s : {3, 4}) {
      QuadraturePlan a, b;
      a.s = s;
      b.s = s + 1;
      const auto ra = oscillatory_integral(sym(text), a), rb = oscillatory_integral(sym(text), b);
      const double d = std::abs(ra.value[0] - rb.value[0]);
      o.check(d, ra.err[0] + rb.err[0] + 1e-12);
      o.check(d, 1e-5);
    }
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  const std::vector<double> sched{1.0, 0.5, 0.25, 0.125};
  struct Case {
    const char* text;
    bool schwartz;
  };
  for (const Case& c : {Case{"exp(-x1^2)", false}, Case{"(2-i)*exp(-(p1-0.5)^2-x1^2)", true},
                        Case{"exp(-p1^2-x1^2)*(1+0.3*i*p1*x1)", true}, Case{"exp(-2*p1^2-(x1-0.3)^2)", true}}) {
    const auto F = sym(c.text);
    const cplx osc = oscillatory_integral(F, QuadraturePlan{}).value[0];
    const cplx lim = cutoff_limit_integral(F, sched, {0.0}, {0.0}).value[0];
    o.check(std::abs(osc - lim), 1e-4);
    if (c.schwartz) {
      QuadraturePlan d;
      d.radius = 12.0;
      o.check(std::abs(osc - direct_integral(F, d).value[0]), 1e-4);
    }
  }
  return o;
}

Outcome calculational_rules() {
  Outcome o;
  for (const auto& c : verify_identities(Pairing::identity(1), 1e-4)) {
    if (c.identity == "parts" || c.identity == "affine" || c.identity == "conjugation") o.check(c.residual, 1e-5);
    else if (c.identity == "fubini") o.check(c.residual, 1e-4);
  }
  return o;
}

Outcome deformation_basics() {
  Outcome o;
  const auto f = sch("exp(-x1^2)");
  const auto g = sch("exp(-(x1-0.5)^2/2)");
  for (double x : {-1.0, 0.0, 1.0}) {
    const std::vector<double> pt{x};
    const cplx v = moyal_product(f, g, DeformationParams::scalar(0.0), pt).value[0];
    o.check(std::abs(v - f.eval(pt)[0] * g.eval(pt)[0]), 1e-5);
    const cplx it = iterated_moyal(f, g, {0.1}, {0.15}, 1, pt, SuiteConfig::default_suite_plan()).value[0];
    const cplx d = moyal_product(f, g, DeformationParams::scalar(0.25), pt).value[0];
    o.check(std::abs(it - d), 1e-4);
  }
  return o;
}

Outcome associativity_module() {
  Outcome o;
  const auto f = sch("exp(-x1^2)");
  const auto g = sch("(1+x1)*exp(-x1^2/3)");
  const auto h = sch("exp(-(x1-0.5)^2/2)");
  const auto P = DeformationParams::scalar(0.2, SuiteConfig::default_suite_plan());
  const auto cb = CovariantBilinear::pointwise(1);
  const auto fg = deformed_symbol(cb, P, f, g), gh = deformed_symbol(cb, P, g, h);
  const auto tr = ActionSpec::translation(1);
  for (double x : {-1.0, 0.0, 1.0}) {
    const cplx l = deform_bilinear(cb, P, fg, h, {x}).value[0];
    const cplx r = deform_bilinear(cb, P, f, gh, {x}).value[0];
    o.check(std::abs(l - r), 1e-4);
    const auto e = module_deform(tr, tr, P, f, g, h, {x}, 1e-4);
    o.check(e.residual, 1e-4);
  }
  return o;
}

Outcome identity_star() {
  Outcome o;
  const auto f = sch("(1+i*x1)*exp(-x1^2)");
  const auto one = constant_symbol(1, {1.0});
  for (double x : {-1.0, 0.0, 1.0}) {
    const std::vector<double> pt{x};
    o.check(std::abs(moyal_product(f, one, DeformationParams::scalar(0.2), pt).value[0] - f.eval(pt)[0]), 1e-5);
  }
  QuadraturePlan coarse;
  coarse.radius = 8.0;
  coarse.radius_x = 6.0;
  coarse.refinement = QuadraturePlan::Refinement::None;
  const double t = 0.3;
  const auto P = DeformationParams::matrix(2, {0.0, t, -t, 0.0}, coarse);
  const auto a = sch("(1+i*x1)*exp(-x1^2-x2^2)", L2);
  const auto b = sch("(x2+i)*exp(-(x1-0.5)^2-x2^2/2)", L2);
  for (auto x : std::vector<std::vector<double>>{{0.2, 0.1}, {-0.5, 0.4}, {0.0, 0.0}}) {
    const cplx ab = moyal_product(a, b, P, x).value[0];
    const cplx ba = moyal_product(conjugate_symbol(b), conjugate_symbol(a), P, x).value[0];
    o.check(std::abs(std::conj(ab) - ba), 1e-3);
  }
  return o;
}

Outcome moyal_cross_validation() {
  Outcome o;
  const auto f = sch("exp(-x1^2)");
  for (double x : {-1.0, 0.0, 1.0}) {
    const cplx v = moyal_product(f, f, DeformationParams::scalar(0.1), {x}).value[0];
    o.check(std::abs(v - moyal_series(f, f, 0.1, x, 40)), 1e-6);
  }
  o.check(std::abs(twisted_convolution(f, f, {0.0}, {0.0}).value - std::sqrt(std::numbers::pi / 2.0)), 1e-8);
  return o;
}

Outcome compact_action() {
  Outcome o;
  CompactTau tau;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), uy(-1.5, 1.5), far(1.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), xp = ux(rng), y = uy(rng);
    o.check(std::abs(tau1(x, tau1(xp, y, tau), tau) - tau1(x + xp, y, tau)), 1e-8);
  }
  for (int i = 0; i < 100; ++i) {
    const double y = (i % 2 ? 1.0 : -1.0) * far(rng), x = ux(rng);
    if (tau1(x, y, tau) != y) o.pass = false;
  }
  const auto xs = log_spaced(1.0, 100.0, 10);
  const auto grid = default_growth_grid(401);
  const double limit[] = {0.2, 3.3, 5.5};
  for (int l = 0; l <= 2; ++l) o.check(std::max(0.0, growth_exponent_fit(0, l, xs, grid, tau).fitted_exponent), limit[l]);
  return o;
}

Outcome locality() {
  Outcome o;
  CompactTau tau;
  const auto f = sch("exp(-x1^2)*(1+x1)");
  const auto g = sch("1/(1+x1^2)");
  for (double y : {1.3, -2.0, 4.0})
    for (double th : {0.0, 0.1, 0.5}) {
      const std::vector<double> pt{y};
      const cplx v = local_nc_product(f, g, tau, {th}, pt).value[0];
      o.check(std::abs(v - f.eval(pt)[0] * g.eval(pt)[0]), 1e-5);
    }
  return o;
}

Outcome jets_vs_fd() {
  Outcome o;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int exprs = 0;
  for (int k = 1; k <= 2; ++k) {
    testing::ExprGen gen(900 + k, k);
    for (int t = 0; t < 100; ++t, ++exprs) {
      const auto e = expr::parse_or_throw(gen.next(3));
      const expr::VarLayout lay{k, false};
      std::vector<double> pt(k);
      for (auto& v : pt) v = u(rng);
      const Jet j = expr::eval_jet(e, pt, std::vector<int>(k, 4), lay);
      for (int idx = 0; idx < j.size(); ++idx) {
        const MultiIndex mu = j.layout().multi(idx);
        if (order_of(mu) > 4) continue;
        const cplx exact = extract_partial(j, mu);
        const cplx fd = testing::fd_partial(e, pt, mu, 1e-6, lay);
        o.check(std::abs(exact - fd), 1e-5 * std::abs(exact) + 1e-8);
      }
    }
  }
  o.detail = std::to_string(exprs) + " expressions";
  return o;
}

Outcome qs_certificates() {
  Outcome o;
  for (int n : {1, 2})
    for (int s : {1, 2, 3})
      if (!qs_certify(qs_coefficients(n, s))) o.pass = false;
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "normalization", 10, normalization},
      {2, "s-independence", 0, s_independence},
      {3, "oracle equivalence", 120, oracle_equivalence},
      {4, "calculational rules", 0, calculational_rules},
      {5, "deformation basics", 0, deformation_basics},
      {6, "associativity and module law", 600, associativity_module},
      {7, "identity and star", 900, identity_star},
      {8, "Moyal cross-validation", 0, moyal_cross_validation},
      {9, "compact action", 0, compact_action},
      {10, "locality of the compact deformation", 0, locality},
      {11, "jets vs finite differences", 0, jets_vs_fd},
      {12, "Q_s certificate", 0, qs_certificates},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit <= 0 || secs < c.time_limit;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s %2d %-36s worst/tol=%.3g time=%.1fs%s%s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.worst, secs,
                in_time ? "" : " (over time limit)", o.detail.empty() ? "" : " ", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <random>

#include "rdq/actions.hpp"
#include "rdq/errors.hpp"

using namespace rdq;

namespace {

const CompactTau tau1d{};

// Independent flow: plain dopri5 on L with tight tolerances, no tail shortcut.
double reference_flow(double x, double y) {
  namespace ode = boost::numeric::odeint;
  if (std::abs(y) >= 1.0 || x == 0.0) return y;
  std::vector<double> s{y};
  auto sys = [](const std::vector<double>& a, std::vector<double>& da, double) { da[0] = tau_field(a[0]); };
  ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<std::vector<double>>>(1e-13, 1e-13), sys, s,
                          0.0, x, x > 0 ? 0.01 : -0.01);
  return s[0];
}

double e_of(double y) { return std::exp(1.0 / (1.0 - y)); }
double e_inv(double u) { return 1.0 - 1.0 / std::log(u); }

SymbolFn gauss1() { return symbol_from_expr("exp(-x1^2)", {1, false}); }

}  // namespace

TEST_CASE("vector field") {
  CHECK(tau_field(1.0) == 0.0);
  CHECK(tau_field(-1.3) == 0.0);
  CHECK(tau_field(0.0) == doctest::Approx(9.0 / 16.0 * std::exp(-2.0)).epsilon(1e-15));
  for (double y : {0.5, 0.6, 0.75, 0.9, 0.99}) {
    const double om = 1.0 - y;
    CHECK(tau_field(y) == doctest::Approx(om * om * std::exp(-1.0 / om)).epsilon(1e-14));
    CHECK(tau_field(-y) == tau_field(y));
  }
  for (int i = 0; i < 200; ++i) {
    const double y = -0.99 + 1.98 * i / 199.0;
    CHECK(tau_field(y) > 0.0);
  }
  // Jets of L match central differences across the blend region.
  for (double y : {-0.45, 0.2, 0.4, 0.43, 0.47, 0.6, 0.8}) {
    const Jet j = tau_field(jet_var(0, {y}, {2}));
    const double h = 1e-5;
    const double d1 = (tau_field(y + h) - tau_field(y - h)) / (2 * h);
    const double d2 = (tau_field(y + h) - 2 * tau_field(y) + tau_field(y - h)) / (h * h);
    CHECK(j.value().real() == doctest::Approx(tau_field(y)).epsilon(1e-14));
    CHECK(std::abs(j.coeffs()[1].real() - d1) < 1e-7);
    CHECK(std::abs(2 * j.coeffs()[2].real() - d2) < 1e-4);
  }
}

TEST_CASE("tau1 examples") {
  CHECK(tau1(3.7, 1.5, tau1d) == 1.5);
  CHECK(tau1(-2.0, -1.0, tau1d) == -1.0);
  for (double y : {-0.9, -0.2, 0.0, 0.4, 0.95}) CHECK(tau1(0.0, y, tau1d) == y);

  // Closed form on the tail against the integrated path.
  const double closed = e_inv(e_of(0.75) + 2.0);
  CompactTau rk = tau1d;
  rk.closed_form_tail = false;
  CHECK(std::abs(tau1(2.0, 0.75, tau1d) - closed) < 1e-12);
  CHECK(std::abs(tau1(2.0, 0.75, rk) - closed) < 1e-9);
  CHECK(std::abs(reference_flow(2.0, 0.75) - closed) < 1e-9);
  // Odd symmetry tau_x(-y) = -tau_{-x}(y).
  for (double y : {0.1, 0.6, 0.8})
    for (double x : {-3.0, 0.5, 7.0}) CHECK(std::abs(tau1(x, -y, tau1d) + tau1(-x, y, tau1d)) < 1e-12);
}

TEST_CASE("tau1 agrees with an independent integration") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> ux(-20.0, 20.0), uy(-0.99, 0.99);
  for (int i = 0; i < 60; ++i) {
    const double x = ux(rng), y = uy(rng);
    const double v = tau1(x, y, tau1d);
    INFO("x = " << x << ", y = " << y);
    CHECK(std::abs(v - reference_flow(x, y)) < 1e-8);
    CHECK(std::abs(v) < 1.0);
  }
}

TEST_CASE("group law") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> ux(-10.0, 10.0), uy(-1.2, 1.2);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), xp = ux(rng), y = uy(rng);
    const double lhs = tau1(x, tau1(xp, y, tau1d), tau1d);
    const double rhs = tau1(x + xp, y, tau1d);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  CHECK(worst <= 1e-8);

  CompactTau t2;
  t2.n = 2;
  std::uniform_real_distribution<double> uy2(-1.4, 1.4);
  for (int i = 0; i < 30; ++i) {
    const std::vector<double> x{ux(rng), ux(rng)}, xp{ux(rng), ux(rng)}, y{uy2(rng), uy2(rng)};
    std::vector<double> s{x[0] + xp[0], x[1] + xp[1]};
    const auto lhs = tau_n(x, tau_n(xp, y, t2), t2);
    const auto rhs = tau_n(s, y, t2);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(lhs[j] - rhs[j]) <= 10 * t2.ode_tol);
  }
}

TEST_CASE("tau_n examples") {
  CompactTau t2;
  t2.n = 2;
  CHECK(tau_n({5.0, -3.0}, {2.0, 0.3}, t2) == std::vector<double>{2.0, 0.3});
  const auto in = tau_n({1.5, -0.7}, {0.2, -0.6}, t2);
  CHECK(in[0] == tau1(1.5, 0.2, tau1d));
  CHECK(in[1] == tau1(-0.7, -0.6, tau1d));
  // In the transition band only the effective time changes.
  const double c = tau_chi(1.1, t2.eps);
  CHECK(c > 0.0);
  CHECK(c < 1.0);
  const auto band = tau_n({2.0, 2.0}, {1.1, 0.3}, t2);
  CHECK(band[0] == 1.1);
  CHECK(std::abs(band[1] - tau1(2.0 * c, 0.3, tau1d)) < 1e-15);
  CHECK_THROWS_AS(tau_n({1.0}, {0.0, 0.0}, t2), UsageError);
}

TEST_CASE("tau partial derivatives") {
  CHECK(tau_partials(0, 1, 0.0, 0.3, tau1d) == doctest::Approx(1.0));
  for (auto [x, y] : std::vector<std::pair<double, double>>{{1.0, 0.3}, {-4.0, 0.7}, {12.0, -0.8}}) {
    CHECK(std::abs(tau_partials(1, 0, x, y, tau1d) - tau_field(tau1(x, y, tau1d))) < 1e-12);
  }
  // Mixed partial against central differences, step 1e-4. At (1, 0.3) the trajectory ends on the
  // flat edge of the blend, so the mixed partial is tiny there; (1, 0.45) is a generic point.
  const double h = 1e-4;
  for (auto [x, y] : std::vector<std::pair<double, double>>{{1.0, 0.3}, {1.0, 0.45}}) {
    const double fd = (tau1(x + h, y + h, tau1d) - tau1(x + h, y - h, tau1d) - tau1(x - h, y + h, tau1d) +
                       tau1(x - h, y - h, tau1d)) /
                      (4 * h * h);
    const double d11 = tau_partials(1, 1, x, y, tau1d);
    CHECK(std::abs(d11 - fd) <= 1e-4 * std::max(std::abs(d11), 1e-4));
  }
  CHECK(std::abs(tau_partials(1, 1, 1.0, 0.45, tau1d)) > 1e-2);

  // y- and x-derivatives against differences on random points: first derivatives from values
  // (five-point stencil, step 1e-3), second derivatives from differences of jet first derivatives.
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ux(-6.0, 6.0), uy(-0.9, 0.9);
  for (int i = 0; i < 20; ++i) {
    const double xx = ux(rng), yy = uy(rng);
    const double h1 = 1e-3, h2 = 1e-4;
    auto f = [&](double v) { return tau1(xx, v, tau1d); };
    auto g = [&](double v) { return tau1(v, yy, tau1d); };
    auto five = [&](auto fn, double c) {
      return (-fn(c + 2 * h1) + 8 * fn(c + h1) - 8 * fn(c - h1) + fn(c - 2 * h1)) / (12 * h1);
    };
    const double d1 = five(f, yy);
    const double d2 = (tau_partials(0, 1, xx, yy + h2, tau1d) - tau_partials(0, 1, xx, yy - h2, tau1d)) / (2 * h2);
    const double p1 = tau_partials(0, 1, xx, yy, tau1d), p2 = tau_partials(0, 2, xx, yy, tau1d);
    INFO("x = " << xx << ", y = " << yy);
    CHECK(std::abs(p1 - d1) <= 1e-5 * std::max(1.0, std::abs(p1)));
    CHECK(std::abs(p2 - d2) <= 1e-4 * std::max(1.0, std::abs(p2)));
    const double g1 = five(g, xx);
    const double g2 = (tau_partials(1, 0, xx + h2, yy, tau1d) - tau_partials(1, 0, xx - h2, yy, tau1d)) / (2 * h2);
    CHECK(std::abs(tau_partials(1, 0, xx, yy, tau1d) - g1) <= 1e-6);
    CHECK(std::abs(tau_partials(2, 0, xx, yy, tau1d) - g2) <= 1e-6);
  }
  CHECK_THROWS_AS(tau_partials(4, 3, 0.0, 0.0, tau1d), UsageError);
}

TEST_CASE("jets of tau compose correctly") {
  // Bivariate jet of tau1_s(y) against differences in s and y.
  const auto js = jet_vars({1.2, 0.4}, {2, 2});
  const Jet v = tau1_on_jets(js[0], js[1], tau1d);
  const double h = 1e-4;
  auto f = [&](double x, double y) { return tau1(x, y, tau1d); };
  CHECK(std::abs(v.value().real() - f(1.2, 0.4)) < 1e-9);
  CHECK(std::abs(v.coeff({1, 0}).real() - (f(1.2 + h, 0.4) - f(1.2 - h, 0.4)) / (2 * h)) < 1e-6);
  CHECK(std::abs(v.coeff({0, 1}).real() - (f(1.2, 0.4 + h) - f(1.2, 0.4 - h)) / (2 * h)) < 1e-6);
  CHECK(std::abs(v.coeff({1, 1}).real() - tau_partials(1, 1, 1.2, 0.4, tau1d)) < 1e-9);
  CHECK(std::abs(2.0 * v.coeff({0, 2}).real() - tau_partials(0, 2, 1.2, 0.4, tau1d)) < 1e-9);
}

TEST_CASE("growth exponents") {
  const auto xs = log_spaced(1.0, 100.0, 10);
  const auto grid = default_growth_grid(401);
  const auto g00 = growth_exponent_fit(0, 0, xs, grid, tau1d);
  CHECK(g00.fitted_exponent <= 0.2);
  for (double s : g00.sups) CHECK(s <= 1.0);
  const auto g01 = growth_exponent_fit(0, 1, xs, grid, tau1d);
  CHECK(g01.fitted_exponent <= 3.3);
  CHECK(g01.fitted_exponent > 0.0);
  const auto g02 = growth_exponent_fit(0, 2, xs, grid, tau1d);
  CHECK(g02.fitted_exponent <= 5.5);
  const auto g12 = growth_exponent_fit(1, 2, xs, grid, tau1d);
  CHECK(g12.fitted_exponent <= 5.5);
  CHECK(g12.target_exponent == 5.0);
  const auto csv = growth_csv({g00, g01});
  CHECK(csv.rfind("k,l,fitted_exponent,target_exponent,residual,x_min,x_max\n", 0) == 0);
  CHECK_THROWS_AS(growth_exponent_fit(0, 1, {2.0, 1.0}, grid, tau1d), UsageError);
}

TEST_CASE("act") {
  const auto f = gauss1();
  const std::vector<double> y{0.4};
  CHECK(act(ActionSpec::translation(1), {0.0}, f).eval(y)[0] == f.eval(y)[0]);
  CHECK(act(ActionSpec::phase(1, {1.0}), {0.0}, f).eval(y)[0] == f.eval(y)[0]);
  CHECK(std::abs(act(ActionSpec::translation(1), {0.5}, f).eval(y)[0] - std::exp(-0.81)) < 1e-15);
  CHECK(std::abs(act(ActionSpec::phase(1, {2.0}), {0.5}, f).eval(y)[0] -
                 std::exp(cplx(0.0, 0.4)) * std::exp(-0.16)) < 1e-15);
  const auto comp = ActionSpec::compact(tau1d);
  for (double x : {-30.0, 0.0, 2.5, 100.0}) {
    CHECK(act(comp, {x}, f).eval(std::vector<double>{3.0})[0] == f.eval(std::vector<double>{3.0})[0]);
    CHECK(std::abs(act(comp, {x}, f).eval(y)[0] - std::exp(-std::pow(tau1(x, 0.4, tau1d), 2))) < 1e-15);
  }
  CHECK_THROWS_AS(act(ActionSpec::translation(2), {0.0, 0.0}, f), UsageError);
  CHECK_THROWS_AS(ActionSpec::phase(2, {1.0}), UsageError);
}

TEST_CASE("group law of the pulled-back symbols") {
  const auto f = symbol_from_expr("exp(-x1^2)*(1+x1)", {1, false});
  const std::vector<ActionSpec> specs{ActionSpec::translation(1), ActionSpec::phase(1, {0.7}),
                                      ActionSpec::compact(tau1d)};
  for (const auto& spec : specs) {
    double worst = 0.0;
    for (double x : {-2.0, 0.3, 4.0})
      for (double xp : {-1.0, 2.5})
        for (int i = 0; i <= 40; ++i) {
          const std::vector<double> y{-1.5 + 3.0 * i / 40.0};
          const auto lhs = act(spec, {x}, act(spec, {xp}, f)).eval(y)[0];
          const auto rhs = act(spec, {x + xp}, f).eval(y)[0];
          worst = std::max(worst, std::abs(lhs - rhs));
        }
    INFO(spec.name());
    CHECK(worst <= (spec.name() == "compact" ? 1e-8 : 1e-14));
  }
}

TEST_CASE("generator by differences") {
  const auto f = symbol_from_expr("exp(-x1^2)*cos(x1)", {1, false});
  const auto df = differentiate(f, {1});
  const std::vector<ActionSpec> specs{ActionSpec::translation(1), ActionSpec::phase(1, {0.7}),
                                      ActionSpec::compact(tau1d)};
  for (const auto& spec : specs) {
    std::vector<double> errs;
    for (double h : {1e-2, 1e-3, 1e-4}) {
      double worst = 0.0;
      for (int i = 0; i <= 30; ++i) {
        const std::vector<double> y{-1.2 + 2.4 * i / 30.0};
        const cplx fy = f.eval(y)[0];
        const cplx diff = (act(spec, {h}, f).eval(y)[0] - fy) / h;
        cplx gen;
        if (spec.name() == "translation")
          gen = df.eval(y)[0];
        else if (spec.name() == "phase")
          gen = cplx(0.0, 0.7 * y[0]) * fy;
        else
          gen = tau_field(y[0]) * df.eval(y)[0];
        worst = std::max(worst, std::abs(diff - gen));
      }
      errs.push_back(worst);
    }
    INFO(spec.name());
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[2] < 1e-3);
  }
}

TEST_CASE("polynomial boundedness of the compact pullback") {
  // sup_y |d_x alpha_x(f)(y)| / (1 + x^2)^{m/2} stays bounded for m = b_1 = 3.
  const auto f = gauss1();
  const auto comp = ActionSpec::compact(tau1d);
  double first = -1.0, worst = 0.0;
  for (double x : log_spaced(1.0, 100.0, 8)) {
    double sup = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double y = -0.999 + 1.998 * i / 200.0;
      const Jet v = act(comp, {x}, f).on_jets(jet_vars({y}, {1}))[0];
      sup = std::max(sup, std::abs(v.coeffs()[1]));
    }
    const double ratio = sup / std::pow(1.0 + x * x, 1.5);
    if (first < 0) first = ratio;
    worst = std::max(worst, ratio);
  }
  CHECK(worst <= 1.0 * std::max(first, 1e-300) * 1.0001);
}

TEST_CASE("action order profiles") {
  const auto sys = SeminormSystem::max_abs(1);
  const auto base = OrderProfile::uniform(sys, 0.0, 0.0);
  const auto tr = action_order_profile(ActionSpec::translation(1), base, 3);
  CHECK(tr.m("max,2") == 0.0);
  CHECK(tr.rho("max,2") == 0.0);
  const auto tr2 = action_order_profile(ActionSpec::translation(1), OrderProfile::uniform(sys, 1.0, 1.0), 3);
  CHECK(tr2.m("max,3") == 2.0);
  const auto ph = action_order_profile(ActionSpec::phase(1, {1.0}), base, 3);
  CHECK(ph.m("max,2") == 2.0);
  const auto co = action_order_profile(ActionSpec::compact(tau1d), base, 3);
  CHECK(co.m("max,2") == 8.0);
  CHECK(co.m("max,1") == 3.0);
}

TEST_CASE("orbit symbols") {
  const auto f = gauss1();
  const auto tr = orbit_symbol(ActionSpec::translation(1), f, {0.3}, {0.2}, 1);
  CHECK(std::abs(tr.eval(std::vector<double>{2.0})[0] - std::exp(-0.49)) < 1e-15);
  const auto co = orbit_symbol(ActionSpec::compact(tau1d), f, {0.3}, {0.5}, 1);
  CHECK(std::abs(co.eval(std::vector<double>{4.0})[0] - std::exp(-std::pow(tau1(2.0, 0.3, tau1d), 2))) < 1e-15);
  const auto out = orbit_symbol(ActionSpec::compact(tau1d), f, {3.0}, {0.5}, 1);
  CHECK(out.eval(std::vector<double>{4.0})[0] == f.eval(std::vector<double>{3.0})[0]);
  // p-derivative of the compact orbit: d/dp f(tau_{0.5 p}(y)) = 0.5 f'(tau) L(tau).
  const Jet j = co.on_jets(jet_vars({4.0}, {1}))[0];
  const double t = tau1(2.0, 0.3, tau1d);
  CHECK(std::abs(j.coeffs()[1].real() - 0.5 * (-2 * t * std::exp(-t * t)) * tau_field(t)) < 1e-10);
}

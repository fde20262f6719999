#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rdq/errors.hpp"
#include "rdq/qs.hpp"

using namespace rdq;

namespace {

MultiIndex cat(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex r = a;
  r.insert(r.end(), b.begin(), b.end());
  return r;
}

// Applies sum a^{mu nu} d_x^mu d_p^nu to e^{i(p, Mx)} with jets and divides by the phase.
cplx apply_numerically(const QsTable& q, const std::vector<double>& M, const std::vector<double>& pt) {
  const int n = q.n;
  int top = 0;
  for (std::size_t k = 0; k < q.value.size(); ++k)
    for (int a = 0; a < n; ++a) top = std::max({top, q.mu[k][a], q.nu[k][a]});
  std::vector<int> orders(2 * n, top);
  auto v = jet_vars(pt, orders);
  Jet arg = Jet::constant_like(v[0], 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) arg += jet_mul(v[a], v[n + b]) * cplx(M[a * n + b]);
  const Jet ph = jet_apply_unary(Elementary::Exp, arg * cplx(0.0, 1.0));
  cplx sum = 0.0;
  for (std::size_t k = 0; k < q.value.size(); ++k) sum += q.value[k] * extract_partial(ph, cat(q.nu[k], q.mu[k]));
  return sum / ph.value();
}

cplx ps_value(int n, int s, const std::vector<double>& pt) {
  cplx v = 1.0;
  for (double t : pt) v *= std::pow(cplx(t, 1.0), s);
  (void)n;
  return v;
}

std::vector<double> identity(int n) {
  std::vector<double> M(n * n, 0.0);
  for (int i = 0; i < n; ++i) M[i * n + i] = 1.0;
  return M;
}

}  // namespace

TEST_CASE("select_s examples") {
  CHECK(select_s(1, {{0.0, 0.0}}) == 3);
  CHECK(select_s(1, {{2.0, 1.0}}) == 4);
  CHECK(select_s(1, {{0.0, -0.5}}) == 5);
  CHECK(select_s(1, {{-INFINITY, 0.0}}) == 0);
  CHECK(select_s(2, {{0.0, 0.0}}) == 2);
  CHECK(select_s(1, {{0.0, 0.0}, {2.0, 1.0}}) == 4);
  CHECK_THROWS_AS(select_s(1, {{0.0, 1.5}}), UsageError);
  CHECK_THROWS_AS(select_s(1, {{0.0, -1.0}}), UsageError);
}

TEST_CASE("select_s is the smallest order meeting the bound") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> mdist(-3.0, 6.0), rdist(-0.95, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 3;
    const double m = mdist(rng), rho = rdist(rng);
    const int s = select_s(n, {{m, rho}});
    auto ok = [&](int t) {
      const double b = -2.0 * (n + 1);
      return m - 2.0 * t * n < b && m - 2.0 * t * n - rho * 2.0 * t * n < b;
    };
    CHECK(ok(s));
    if (s > 0) CHECK_FALSE(ok(s - 1));
  }
}

TEST_CASE("Q_s tables for n = 1") {
  const auto q0 = qs_coefficients(1, 0);
  REQUIRE(q0.value.size() == 1);
  CHECK(q0.a[0] == GaussRational(1));

  const auto q1 = qs_coefficients(1, 1);
  CHECK(q1.exact);
  CHECK(q1.at({0}, {0}) == cplx(-1.0, 1.0));
  CHECK(q1.at({1}, {0}) == cplx(1.0));
  CHECK(q1.at({0}, {1}) == cplx(1.0));
  CHECK(q1.at({1}, {1}) == cplx(-1.0));

  const auto t1 = qs_transpose_coefficients(1, 1);
  CHECK(t1.transposed);
  CHECK(t1.at({0}, {0}) == cplx(-1.0, 1.0));
  CHECK(t1.at({1}, {0}) == cplx(-1.0));
  CHECK(t1.at({0}, {1}) == cplx(-1.0));
  CHECK(t1.at({1}, {1}) == cplx(-1.0));
  CHECK_THROWS_AS(qs_coefficients(1, -1), UsageError);
}

TEST_CASE("phase derivative polynomial") {
  // d_p d_x e^{ipx} = (i - p x) e^{ipx}
  const auto d = phase_derivative_poly(1, {1}, {1});
  REQUIRE(d.size() == 2);
  CHECK(d.at({0, 0}) == GaussRational(0, 1));
  CHECK(d.at({1, 1}) == GaussRational(-1));
  const auto dx2 = phase_derivative_poly(1, {2}, {0});
  REQUIRE(dx2.size() == 1);
  CHECK(dx2.at({2, 0}) == GaussRational(-1));
}

TEST_CASE("exact certificate") {
  for (int s = 0; s <= 4; ++s) CHECK(qs_certify(qs_coefficients(1, s)));
  for (int s = 0; s <= 3; ++s) CHECK(qs_certify(qs_coefficients(2, s)));
  CHECK(qs_certify(qs_coefficients(3, 1)));
  // Transposed tables certify through their untransposed form.
  CHECK(qs_certify(qs_transpose(qs_coefficients(1, 2))));
  auto broken = qs_coefficients(1, 2);
  broken.a[0] = broken.a[0] + GaussRational(1, 3);
  CHECK_FALSE(qs_certify(broken));
}

TEST_CASE("n = 2 table is the tensor product of n = 1 tables") {
  for (int s = 1; s <= 2; ++s) {
    const auto one = qs_coefficients(1, s);
    const auto two = qs_coefficients(2, s);
    std::size_t nonzero = 0;
    for (std::size_t k = 0; k < two.value.size(); ++k) {
      const GaussRational& want = two.a[k];
      GaussRational prod(0);
      bool found1 = false, found2 = false;
      GaussRational a1, a2;
      for (std::size_t j = 0; j < one.value.size(); ++j) {
        if (one.mu[j][0] == two.mu[k][0] && one.nu[j][0] == two.nu[k][0]) {
          a1 = one.a[j];
          found1 = true;
        }
        if (one.mu[j][0] == two.mu[k][1] && one.nu[j][0] == two.nu[k][1]) {
          a2 = one.a[j];
          found2 = true;
        }
      }
      if (found1 && found2) prod = a1 * a2;
      CHECK(prod == want);
      if (!want.is_zero()) ++nonzero;
    }
    CHECK(nonzero > 0);
    // The double-precision solve for M = identity lands on the same table.
    const auto ls = qs_coefficients(2, s, identity(2));
    CHECK_FALSE(ls.exact);
    for (std::size_t k = 0; k < two.value.size(); ++k)
      CHECK(std::abs(ls.at(two.mu[k], two.nu[k]) - two.value[k]) < 1e-10);
  }
}

TEST_CASE("tables reproduce P^s(x) P^s(p) on the phase numerically") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int n = 1; n <= 2; ++n)
    for (int s = 0; s <= (n == 1 ? 4 : 2); ++s) {
      const auto q = qs_coefficients(n, s);
      for (int t = 0; t < 5; ++t) {
        std::vector<double> pt(2 * n);
        for (auto& v : pt) v = u(rng);
        const cplx want = ps_value(n, s, pt);
        CHECK(std::abs(apply_numerically(q, identity(n), pt) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
      }
    }
}

TEST_CASE("general pairing matrices") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const std::vector<std::vector<double>> mats = {{-1.0}, {2.0, 1.0, 1.0, 1.0}, {0.0, 1.0, -1.0, 0.5}};
  for (const auto& M : mats) {
    const int n = M.size() == 1 ? 1 : 2;
    for (int s = 1; s <= 2; ++s) {
      const auto q = qs_coefficients(n, s, M);
      CHECK(q.pairing == M);
      for (int t = 0; t < 4; ++t) {
        std::vector<double> pt(2 * n);
        for (auto& v : pt) v = u(rng);
        const cplx want = ps_value(n, s, pt);
        CHECK(std::abs(apply_numerically(q, M, pt) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
      }
    }
  }
  CHECK_THROWS_AS(qs_coefficients(2, 1, {1.0, 0.0, 0.0}), UsageError);
}

TEST_CASE("Gaussian rationals") {
  const GaussRational a(Rational(1, 2), Rational(-3, 4));
  const GaussRational b(2, 1);
  const GaussRational p = a * b;
  CHECK(p == GaussRational(Rational(7, 4), Rational(-1)));
  CHECK((p / b) == a);
  CHECK((a - a).is_zero());
  CHECK(GaussRational::imag_unit() * GaussRational::imag_unit() == GaussRational(-1));
  CHECK(std::abs(a.to_complex() - cplx(0.5, -0.75)) < 1e-16);
  CHECK_THROWS(a / GaussRational(0));
}

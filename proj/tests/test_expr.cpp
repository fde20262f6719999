#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rdq/expr.hpp"
#include "support/expr_gen.hpp"
#include "support/mp_eval.hpp"

using namespace rdq;
using namespace rdq::expr;

namespace {

cplx plain(const std::string& s, std::vector<double> pt) { return eval_plain(parse_or_throw(s), pt); }

ParseDiagnostic diag_of(const std::string& s) {
  auto r = parse(s);
  REQUIRE(std::holds_alternative<ParseDiagnostic>(r));
  return std::get<ParseDiagnostic>(r);
}

}  // namespace

TEST_CASE("parse examples") {
  CHECK(std::holds_alternative<Expr>(parse("exp(-x1^2)")));
  auto e = parse_or_throw("x1*p1 + i");
  CHECK(e.uses_p());
  CHECK(e.uses_x());
  CHECK(diag_of("exp(").offset == 4);
}

TEST_CASE("parse diagnostics") {
  CHECK(diag_of("").offset == 0);
  CHECK(diag_of("1 +").offset == 3);
  CHECK(diag_of("foo(x1)").offset == 0);
  CHECK(diag_of("x1 + y2").offset == 5);
  CHECK(diag_of("x1^x2").offset == 3);
  CHECK(diag_of("(x1").offset == 3);
  CHECK(diag_of("x1)").offset == 2);
  CHECK(diag_of("2 $ 3").offset == 2);
  CHECK(diag_of("exp(x1, x2)").offset > 0);
  CHECK(diag_of("x0").offset == 0);
  CHECK_THROWS_AS(parse_or_throw("exp("), ParseError);
  CHECK_THROWS_AS(parse_or_throw("exp("), UsageError);
}

TEST_CASE("precedence and associativity") {
  CHECK(plain("2^3^2", {}) == cplx(512.0));
  CHECK(plain("-2^2", {}) == cplx(-4.0));
  CHECK(plain("8/4/2", {}) == cplx(1.0));
  CHECK(plain("1 - 2 - 3", {}) == cplx(-4.0));
  CHECK(plain("2 + 3*4", {}) == cplx(14.0));
  CHECK(plain("2*-3", {}) == cplx(-6.0));
  CHECK(plain("1.5e1", {}) == cplx(15.0));
  CHECK(plain("x1^-1", {4.0}) == cplx(0.25));
}

TEST_CASE("eval_plain examples") {
  CHECK(plain("exp(-x1^2)", {0.0}) == cplx(1.0));
  CHECK(plain("x1*p1", {3.0, 2.0}) == cplx(6.0));
  CHECK(plain("1/(i+x1)", {0.0}) == cplx(0.0, -1.0));
  CHECK(std::abs(plain("gauss(x1, x2)", {1.0, 1.0}) - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(plain("sqrt(4)", {}) - 2.0) < 1e-15);
  CHECK_THROWS_AS(plain("1/x1", {0.0}), DomainError);
}

TEST_CASE("eval_jet examples") {
  auto j = eval_jet(parse_or_throw("exp(-x1^2)"), {0.0}, {2});
  CHECK(std::abs(j.coeffs()[0] - 1.0) < 1e-15);
  CHECK(std::abs(j.coeffs()[1]) < 1e-15);
  CHECK(std::abs(j.coeffs()[2] + 1.0) < 1e-15);

  auto k = eval_jet(parse_or_throw("x1*p1"), {0.0, 0.0}, {1, 1});
  CHECK(k.coeff({1, 1}) == cplx(1.0));
  CHECK(k.coeff({0, 0}) == cplx(0.0));
  CHECK(k.coeff({1, 0}) == cplx(0.0));
  CHECK(k.coeff({0, 1}) == cplx(0.0));

  auto s = eval_jet(parse_or_throw("sqrt(1+x1^2)"), {0.0}, {2});
  CHECK(std::abs(s.coeffs()[0] - 1.0) < 1e-15);
  CHECK(std::abs(s.coeffs()[2] - 0.5) < 1e-15);
}

TEST_CASE("property: pretty-print round trip") {
  for (int k = 1; k <= 3; ++k) {
    testing::ExprGen gen(100 + k, k);
    for (int t = 0; t < 200; ++t) {
      const std::string src = gen.next(4);
      auto e1 = parse_or_throw(src);
      auto e2 = parse_or_throw(to_string(e1));
      CHECK_MESSAGE(same_tree(e1.root(), e2.root()), src);
      CHECK(to_string(e2) == to_string(e1));
    }
  }
}

TEST_CASE("property: jet constant term equals plain value exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 1; k <= 3; ++k) {
    testing::ExprGen gen(200 + k, k);
    for (int t = 0; t < 200; ++t) {
      const std::string src = gen.next(3);
      auto e = parse_or_throw(src);
      const VarLayout lay{k, false};
      std::vector<double> pt(k);
      for (auto& v : pt) v = u(rng);
      std::vector<int> orders(k, static_cast<int>(rng() % 3));
      const cplx a = eval_plain(e, pt, lay);
      const cplx b = eval_jet(e, pt, orders, lay).value();
      CHECK_MESSAGE(a == b, src);
    }
  }
}

TEST_CASE("property: fuzzing never crashes, diagnostics have valid offsets") {
  std::mt19937_64 rng(17);
  const std::string alphabet = "x1p2i+-*/^(),. e0123456789expsincosgauss";
  testing::ExprGen gen(33, 2);
  for (int t = 0; t < 3000; ++t) {
    std::string s;
    if (t % 2 == 0) {
      const int len = static_cast<int>(rng() % 16);
      for (int j = 0; j < len; ++j) s += alphabet[rng() % alphabet.size()];
    } else {
      s = gen.next(3);
      const int edits = 1 + static_cast<int>(rng() % 3);
      for (int j = 0; j < edits && !s.empty(); ++j) {
        const std::size_t pos = rng() % s.size();
        if (rng() % 2)
          s.erase(pos, 1);
        else
          s.insert(pos, 1, alphabet[rng() % alphabet.size()]);
      }
    }
    auto r = parse(s);
    if (auto* d = std::get_if<ParseDiagnostic>(&r)) {
      CHECK(d->offset <= s.size());
      CHECK(!d->message.empty());
    } else {
      auto& e = std::get<Expr>(r);
      CHECK(same_tree(e.root(), parse_or_throw(to_string(e)).root()));
    }
  }
}

TEST_CASE("jets agree with high-precision finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int checked = 0;
  for (int k = 1; k <= 2; ++k) {
    testing::ExprGen gen(300 + k, k);
    for (int t = 0; t < 15; ++t) {
      auto e = parse_or_throw(gen.next(3));
      const VarLayout lay{k, false};
      std::vector<double> pt(k);
      for (auto& v : pt) v = u(rng);
      const std::vector<int> orders(k, 4);
      const Jet j = eval_jet(e, pt, orders, lay);
      for (int idx = 0; idx < j.size(); ++idx) {
        const MultiIndex mu = j.layout().multi(idx);
        if (order_of(mu) > 4) continue;
        const cplx exact = extract_partial(j, mu);
        const cplx fd = testing::fd_partial(e, pt, mu, 1e-4, lay);
        CHECK_MESSAGE(std::abs(exact - fd) <= 1e-5 * std::abs(exact) + 1e-8, to_string(e));
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("separate_px") {
  auto t = separate_px(parse_or_throw("exp(-p1^2 - x1^2)*(1 + x1)"));
  CHECK(!t.empty());
  CHECK(separate_px(parse_or_throw("sin(p1*x1)")).empty());
  auto s = separate_px(parse_or_throw("gauss(p1, x1) + p1*x1"));
  CHECK(s.size() == 2);
}

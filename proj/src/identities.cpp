#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "rdq/oscint.hpp"

namespace rdq {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return v < 0 ? "(" + os.str() + ")" : os.str();
}

std::string var(char kind, int k) { return std::string(1, kind) + std::to_string(k + 1); }

// Linear form sum_j a[row*n+j] * name_j, or a plain variable list when a is empty.
std::vector<std::string> linear(int n, const std::vector<double>& a, char kind, const std::vector<double>& shift = {}) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    std::string s;
    for (int j = 0; j < n; ++j) {
      const double c = a[i * n + j];
      if (c == 0.0) continue;
      if (!s.empty()) s += "+";
      s += num(c) + "*" + var(kind, j);
    }
    if (!shift.empty() && shift[i] != 0.0) s += (s.empty() ? "" : "+") + num(shift[i]);
    out.push_back("(" + (s.empty() ? std::string("0") : s) + ")");
  }
  return out;
}

std::vector<std::string> plain_vars(int n, char kind, bool negate = false) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(negate ? "(-" + var(kind, i) + ")" : var(kind, i));
  return out;
}

// Battery symbol as a list of separable terms in the substituted coordinates P, X; I is the imaginary unit.
std::vector<std::string> battery_terms(const std::vector<std::string>& P, const std::vector<std::string>& X,
                                       const std::string& I) {
  std::string arg;
  for (const auto& p : P) arg += "-" + p + "^2";
  for (const auto& x : X) arg += "-" + x + "^2";
  const std::string g = "exp(" + arg + ")";
  return {"(1+0.5*" + I + ")*" + g, "0.3*" + I + "*" + P[0] + "*" + X[0] + "*" + g,
          "0.2*" + P.back() + "^2*" + g};
}

std::string join_terms(const std::vector<std::string>& terms, const std::string& factor = "") {
  std::string s;
  for (const auto& t : terms) s += (s.empty() ? "" : "+") + (factor.empty() ? t : factor + "*" + t);
  return s;
}

std::vector<double> transpose(int n, const std::vector<double>& a) {
  std::vector<double> t(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t[j * n + i] = a[i * n + j];
  return t;
}

std::vector<double> matmul(int n, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) c[i * n + j] += a[i * n + k] * b[k * n + j];
  return c;
}

std::vector<double> inverse(int n, const std::vector<double>& a) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a[i * n + j];
  const Eigen::MatrixXd inv = m.inverse();
  std::vector<double> out(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = inv(i, j);
  return out;
}

std::vector<double> matvec(int n, const std::vector<double>& a, const std::vector<double>& v) {
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] += a[i * n + j] * v[j];
  return out;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

struct Battery {
  int n;
  Pairing pairing;
  QuadraturePlan plan;
  double tol;
  std::vector<IdentityCheck> out;

  SymbolFn sym(const std::string& text, double m = 0.0) const {
    return symbol_from_expr(text, expr::VarLayout{n, true}, m, 0.0);
  }
  std::vector<cplx> I(const SymbolFn& F) const { return oscillatory_integral(F, plan, pairing).value; }
  void record(const std::string& id, const std::string& inst, double residual) {
    out.push_back({id, inst, residual, tol, residual <= tol});
  }
};

void normalization(Battery& b) {
  const int n = b.n;
  std::string gx, gp;
  for (int k = 0; k < n; ++k) {
    gx += "-" + var('x', k) + "^2";
    gp += "-(" + var('p', k) + "-0.5)^2";
  }
  b.record("normalization", "F=exp(" + gx + "), I(F)=F(0)=1",
           std::abs(b.I(b.sym("exp(" + gx + ")"))[0] - cplx(1.0)));
  b.record("normalization", "F=exp(" + gp + "), I(F)=F(0)", std::abs(b.I(b.sym("exp(" + gp + ")"))[0] - std::exp(-0.25 * n)));
  b.record("normalization", "F=2-i constant", std::abs(b.I(b.sym("2-i"))[0] - cplx(2.0, -1.0)));
}

void affine(Battery& b) {
  const int n = b.n;
  const std::vector<double> M = b.pairing.dense();
  const std::vector<double> Minv = inverse(n, M);
  struct Case {
    std::vector<double> A, q, y;
    std::string label;
  };
  std::vector<Case> cases;
  {
    std::vector<double> A(n * n, 0.0);
    for (int i = 0; i < n; ++i) A[i * n + i] = 2.0;
    cases.push_back({A, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), "A=2, q=0, y=0"});
  }
  {
    std::vector<double> A(n * n, 0.0);
    for (int i = 0; i < n; ++i) {
      A[i * n + i] = 1.5 - 0.7 * i;
      if (i + 1 < n) A[i * n + i + 1] = 0.3;
    }
    cases.push_back({A, std::vector<double>(n, 0.4), std::vector<double>(n, -0.3), "A=upper triangular, q=0.4, y=-0.3"});
  }
  for (const auto& c : cases) {
    const auto My = matvec(n, M, c.y);
    std::string phase_p, phase_x;
    const auto Mq = matvec(n, transpose(n, M), c.q);  // (q, Mx) = (M^t q, x)
    for (int k = 0; k < n; ++k) {
      phase_p += "+" + num(My[k]) + "*" + var('p', k);
      phase_x += "+" + num(Mq[k]) + "*" + var('x', k);
    }
    const std::string ep = "exp(-i*(0" + phase_p + "))", ex = "exp(-i*(0" + phase_x + "))";
    const auto lower = battery_terms(linear(n, c.A, 'p', c.q), plain_vars(n, 'x'), "i");
    const std::vector<double> AT = matmul(n, Minv, matmul(n, transpose(n, c.A), M));
    const auto upper = battery_terms(plain_vars(n, 'p'), linear(n, AT, 'x', c.y), "i");
    const auto lhs = b.I(b.sym(join_terms(lower, ep)));
    const auto rhs = b.I(b.sym(join_terms(upper, ex)));
    b.record("affine", c.label, max_diff(lhs, rhs));
  }
}

void parts(Battery& b) {
  const int n = b.n;
  const std::vector<double> M = b.pairing.dense();
  const SymbolFn F = b.sym(join_terms(battery_terms(plain_vars(n, 'p'), plain_vars(n, 'x'), "i")));
  std::vector<MultiIndex> mus;
  mus.push_back(MultiIndex(n, 0));
  mus.back()[0] = 1;
  mus.push_back(MultiIndex(n, 0));
  mus.back()[n - 1] += 1;
  mus.back()[0] += 1;
  const auto Mx = linear(n, M, 'x');
  const auto Mtp = linear(n, transpose(n, M), 'p');
  for (const auto& mu : mus) {
    const int k = order_of(mu);
    const cplx f = std::pow(cplx(0.0, -1.0), k);
    std::string xm = "1", pm = "1";
    std::string label;
    for (int a = 0; a < n; ++a) {
      if (mu[a] == 0) continue;
      xm += "*" + Mx[a] + "^" + std::to_string(mu[a]);
      pm += "*" + Mtp[a] + "^" + std::to_string(mu[a]);
      label += (label.empty() ? "" : ",") + std::to_string(mu[a]) + "@" + std::to_string(a + 1);
    }
    MultiIndex nu_p(2 * n, 0), nu_x(2 * n, 0);
    for (int a = 0; a < n; ++a) {
      nu_p[a] = mu[a];
      nu_x[n + a] = mu[a];
    }
    {
      const auto lhs = b.I(differentiate(F, nu_p));
      auto rhs = b.I(pointwise_product(b.sym(xm, k), F));
      for (auto& z : rhs) z *= f;
      b.record("parts", "d_p^mu, mu=(" + label + ")", max_diff(lhs, rhs));
    }
    {
      const auto lhs = b.I(differentiate(F, nu_x));
      auto rhs = b.I(pointwise_product(b.sym(pm, k), F));
      for (auto& z : rhs) z *= f;
      b.record("parts", "d_x^mu, mu=(" + label + ")", max_diff(lhs, rhs));
    }
  }
}

void conjugation(Battery& b) {
  const int n = b.n;
  const auto F = b.sym(join_terms(battery_terms(plain_vars(n, 'p'), plain_vars(n, 'x'), "i")));
  const auto Fm = b.sym(join_terms(battery_terms(plain_vars(n, 'p', true), plain_vars(n, 'x'), "(-i)")));
  const auto lhs = b.I(F);
  const auto rhs = b.I(Fm);
  b.record("conjugation", "conj(I(F)) = I(conj F(-p,x))", std::abs(std::conj(lhs[0]) - rhs[0]));
}

// Fubini with two one-dimensional blocks and the pairing diag(m, m).
void fubini(Battery& b) {
  const double m = b.pairing.n == 1 ? b.pairing.dense()[0] : 1.0;
  const Pairing block = Pairing::matrix(1, {m});
  const Pairing both = Pairing::matrix(2, {m, 0.0, 0.0, m});
  const std::string g = "exp(-p1^2-p2^2-x1^2-x2^2)";
  const std::string text = "(1+0.5*i)*" + g + "+0.25*i*p1*x1*" + g + "+0.5*p1*p2*x1*x2*" + g + "+0.3*p2^2*" + g;
  const expr::Expr e = expr::parse_or_throw(text);

  QuadraturePlan full;
  full.radius = 6.0;
  full.exec = b.plan.exec;
  const auto whole = oscillatory_integral(symbol_from_expr(e, {2, true}), full, both).value[0];

  QuadraturePlan inner;
  inner.radius = 4.5;
  inner.s = 3;
  inner.refinement = QuadraturePlan::Refinement::None;
  inner.exec = Exec::Serial;
  QuadraturePlan outer;
  outer.radius = 5.0;
  outer.panels = 2;
  outer.exec = b.plan.exec;

  // Integrate the block `first` inside, the other block outside.
  auto iterated = [&](int first) {
    const int second = 3 - first;
    SymbolFn H;
    H.k = 2;
    H.d = 1;
    H.system = SeminormSystem::max_abs(1);
    H.profile = OrderProfile::schwartz(H.system);
    H.jets = [](std::span<const Jet>) -> std::vector<Jet> {
      throw UsageError("the partial oscillatory integral is evaluated pointwise only");
    };
    H.plain = [=](std::span<const double> pt, std::span<cplx> out) {
      const double ps = pt[0], xs = pt[1];
      const expr::Expr slice = expr::substitute(e, [&](char kind, int idx) -> expr::NodePtr {
        if (idx == second) return expr::num_node(kind == 'p' ? ps : xs);
        return expr::var_node(kind, 1);
      });
      out[0] = oscillatory_integral(symbol_from_expr(slice, {1, true}), inner, block).value[0];
    };
    return direct_integral(H, outer, block).value[0];
  };
  const cplx i12 = iterated(1), i21 = iterated(2);
  b.record("fubini", "I(F) vs I2(I1(F)), F on R^4", std::abs(whole - i12));
  b.record("fubini", "I(F) vs I1(I2(F)), F on R^4", std::abs(whole - i21));
}

}  // namespace

std::vector<IdentityCheck> verify_identities(const Pairing& pairing, double tolerance, const QuadraturePlan& plan) {
  pairing.validate();
  plan.validate();
  if (!(tolerance > 0.0)) throw UsageError("tolerance must be positive");
  Battery b{pairing.n, pairing, plan, tolerance, {}};
  normalization(b);
  affine(b);
  parts(b);
  conjugation(b);
  fubini(b);
  return b.out;
}

}  // namespace rdq

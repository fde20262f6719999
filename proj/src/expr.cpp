#include "rdq/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

namespace rdq::expr {

namespace {

NodePtr make(Node::Kind k, std::vector<NodePtr> kids = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->kids = std::move(kids);
  return n;
}

NodePtr make_num(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Num;
  n->num = v;
  return n;
}

struct Token {
  enum class T { Num, Ident, Op, End } t = T::End;
  std::size_t pos = 0;
  double num = 0.0;
  std::string text;
  char op = 0;
};

struct Failure {
  ParseDiagnostic d;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) { advance(); }

  NodePtr parse_all() {
    NodePtr e = parse_expr();
    if (tok_.t != Token::T::End) fail(tok_.pos, "unexpected '" + token_text() + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(std::size_t pos, std::string msg) { throw Failure{{pos, std::move(msg)}}; }

  std::string token_text() const {
    switch (tok_.t) {
      case Token::T::Num:
      case Token::T::Ident: return tok_.text;
      case Token::T::Op: return std::string(1, tok_.op);
      default: return "end of input";
    }
  }

  void advance() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    tok_ = Token{};
    tok_.pos = i_;
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
      std::size_t j = i_;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
      if (j < s_.size() && s_[j] == '.') {
        ++j;
        while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
      }
      if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
        if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
          while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) ++k;
          j = k;
        } else {
          fail(k, "malformed exponent in number");
        }
      }
      tok_.t = Token::T::Num;
      tok_.text = std::string(s_.substr(i_, j - i_));
      tok_.num = std::strtod(tok_.text.c_str(), nullptr);
      if (!std::isfinite(tok_.num)) fail(i_, "number out of range");
      i_ = j;
      return;
    }
    if (c >= 'a' && c <= 'z') {
      std::size_t j = i_ + 1;
      while (j < s_.size() && ((s_[j] >= 'a' && s_[j] <= 'z') || std::isdigit(static_cast<unsigned char>(s_[j])))) ++j;
      tok_.t = Token::T::Ident;
      tok_.text = std::string(s_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    if (std::string_view("+-*/^(),").find(c) != std::string_view::npos) {
      tok_.t = Token::T::Op;
      tok_.op = c;
      ++i_;
      return;
    }
    fail(i_, std::string("unexpected character '") + c + "'");
  }

  bool is_op(char c) const { return tok_.t == Token::T::Op && tok_.op == c; }

  void expect(char c) {
    if (!is_op(c)) fail(tok_.pos, std::string("expected '") + c + "', found " + token_text());
    advance();
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (is_op('+') || is_op('-')) {
      const auto k = is_op('+') ? Node::Kind::Add : Node::Kind::Sub;
      advance();
      lhs = make(k, {lhs, parse_term()});
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    while (is_op('*') || is_op('/')) {
      const auto k = is_op('*') ? Node::Kind::Mul : Node::Kind::Div;
      advance();
      lhs = make(k, {lhs, parse_factor()});
    }
    return lhs;
  }

  NodePtr parse_factor() {
    if (is_op('-')) {
      advance();
      return make(Node::Kind::Neg, {parse_power()});
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (!is_op('^')) return base;
    // Chained exponents are literals, so x^a^b folds right to x^(a^b).
    std::vector<double> ex;
    while (is_op('^')) {
      advance();
      double sign = 1.0;
      if (is_op('-')) {
        sign = -1.0;
        advance();
      }
      if (tok_.t != Token::T::Num) fail(tok_.pos, "exponent must be a numeric literal");
      ex.push_back(sign * tok_.num);
      advance();
    }
    double e = ex.back();
    for (int j = static_cast<int>(ex.size()) - 2; j >= 0; --j) e = std::pow(ex[j], e);
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Pow;
    n->num = e;
    n->kids = {base};
    return n;
  }

  NodePtr parse_atom() {
    if (tok_.t == Token::T::Num) {
      auto n = make_num(tok_.num);
      advance();
      return n;
    }
    if (is_op('(')) {
      advance();
      NodePtr e = parse_expr();
      expect(')');
      return e;
    }
    if (tok_.t == Token::T::Ident) {
      const std::string name = tok_.text;
      const std::size_t pos = tok_.pos;
      advance();
      if (is_op('(')) {
        static const char* known[] = {"exp", "sin", "cos", "sqrt", "gauss"};
        bool ok = false;
        for (const char* k : known) ok = ok || name == k;
        if (!ok) fail(pos, "unknown function '" + name + "'");
        advance();
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Call;
        n->name = name;
        n->kids.push_back(parse_expr());
        while (is_op(',')) {
          advance();
          n->kids.push_back(parse_expr());
        }
        const std::size_t close = tok_.pos;
        expect(')');
        if (name != "gauss" && n->kids.size() != 1) fail(close, "function '" + name + "' takes one argument");
        return n;
      }
      if (name == "i") return make(Node::Kind::Imag);
      if ((name[0] == 'x' || name[0] == 'p') && name.size() >= 2) {
        bool digits = true;
        for (std::size_t q = 1; q < name.size(); ++q) digits = digits && std::isdigit(static_cast<unsigned char>(name[q]));
        if (digits && name[1] != '0') {
          auto n = std::make_shared<Node>();
          n->kind = Node::Kind::Var;
          n->var_kind = name[0];
          n->var_index = std::atoi(name.c_str() + 1);
          if (n->var_index <= 0 || n->var_index > 64) fail(pos, "variable index out of range");
          return n;
        }
      }
      fail(pos, "unknown identifier '" + name + "'");
    }
    if (tok_.t == Token::T::End) fail(tok_.pos, "unexpected end of input, expected an expression");
    fail(tok_.pos, "unexpected '" + token_text() + "', expected an expression");
  }

  std::string_view s_;
  std::size_t i_ = 0;
  Token tok_;
};

void scan_vars(const Node& n, int& mx, int& mp) {
  if (n.kind == Node::Kind::Var) {
    (n.var_kind == 'x' ? mx : mp) = std::max(n.var_kind == 'x' ? mx : mp, n.var_index);
  }
  for (const auto& k : n.kids) scan_vars(*k, mx, mp);
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_primary(const Node& n) {
  using K = Node::Kind;
  return n.kind == K::Num || n.kind == K::Imag || n.kind == K::Var || n.kind == K::Call;
}

void print(const Node& n, std::string& out) {
  using K = Node::Kind;
  switch (n.kind) {
    case K::Num: out += fmt_num(n.num); break;
    case K::Imag: out += "i"; break;
    case K::Var: out += n.var_kind + std::to_string(n.var_index); break;
    case K::Neg:
      out += "-";
      if (is_primary(*n.kids[0]) || n.kids[0]->kind == K::Pow) {
        print(*n.kids[0], out);
      } else {
        out += "(";
        print(*n.kids[0], out);
        out += ")";
      }
      break;
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::Div: {
      const char* op = n.kind == K::Add ? " + " : n.kind == K::Sub ? " - " : n.kind == K::Mul ? " * " : " / ";
      out += "(";
      print(*n.kids[0], out);
      out += op;
      print(*n.kids[1], out);
      out += ")";
      break;
    }
    case K::Pow:
      if (is_primary(*n.kids[0])) {
        print(*n.kids[0], out);
      } else {
        out += "(";
        print(*n.kids[0], out);
        out += ")";
      }
      out += "^";
      out += fmt_num(n.num);
      break;
    case K::Call:
      out += n.name + "(";
      for (std::size_t q = 0; q < n.kids.size(); ++q) {
        if (q) out += ", ";
        print(*n.kids[q], out);
      }
      out += ")";
      break;
  }
}

}  // namespace

Expr::Expr(NodePtr root) : root_(std::move(root)) { scan_vars(*root_, max_x_, max_p_); }

VarLayout Expr::natural_layout() const {
  VarLayout lay;
  lay.with_p = max_p_ > 0;
  lay.n = std::max(max_x_, max_p_);
  return lay;
}

void Expr::check_layout(const VarLayout& lay) const {
  if (max_x_ > lay.n || max_p_ > lay.n) throw UsageError("expression uses a variable beyond dimension " + std::to_string(lay.n));
  if (max_p_ > 0 && !lay.with_p) throw UsageError("expression uses p-variables but the function takes only x");
}

std::variant<Expr, ParseDiagnostic> parse(std::string_view text) {
  try {
    Parser p(text);
    return Expr(p.parse_all());
  } catch (const Failure& f) {
    ParseDiagnostic d = f.d;
    d.offset = std::min(d.offset, text.size());
    return d;
  }
}

Expr parse_or_throw(std::string_view text) {
  auto r = parse(text);
  if (auto* d = std::get_if<ParseDiagnostic>(&r)) throw ParseError(*d);
  return std::get<Expr>(std::move(r));
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e.root(), out);
  return out;
}

bool same_tree(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.kids.size() != b.kids.size()) return false;
  switch (a.kind) {
    case Node::Kind::Num:
    case Node::Kind::Pow:
      if (a.num != b.num) return false;
      break;
    case Node::Kind::Var:
      if (a.var_kind != b.var_kind || a.var_index != b.var_index) return false;
      break;
    case Node::Kind::Call:
      if (a.name != b.name) return false;
      break;
    default: break;
  }
  for (std::size_t q = 0; q < a.kids.size(); ++q)
    if (!same_tree(*a.kids[q], *b.kids[q])) return false;
  return true;
}

namespace {

void compile(const Node& n, const VarLayout& lay, std::vector<Program::Instr>& code) {
  using K = Node::Kind;
  using Op = Program::Op;
  switch (n.kind) {
    case K::Num: code.push_back({Op::Const, n.num, 0}); return;
    case K::Imag: code.push_back({Op::Const, cplx(0.0, 1.0), 0}); return;
    case K::Var: {
      const int idx = (n.var_kind == 'p') ? n.var_index - 1 : (lay.with_p ? lay.n : 0) + n.var_index - 1;
      code.push_back({Op::Var, 0.0, idx});
      return;
    }
    case K::Neg: compile(*n.kids[0], lay, code); code.push_back({Op::Neg}); return;
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::Div:
      compile(*n.kids[0], lay, code);
      compile(*n.kids[1], lay, code);
      code.push_back({n.kind == K::Add ? Op::Add : n.kind == K::Sub ? Op::Sub : n.kind == K::Mul ? Op::Mul : Op::Div});
      return;
    case K::Pow: {
      compile(*n.kids[0], lay, code);
      const double e = n.num;
      if (e == std::floor(e) && std::abs(e) <= 64.0)
        code.push_back({Op::PowInt, 0.0, static_cast<int>(e)});
      else
        code.push_back({Op::PowReal, e, 0});
      return;
    }
    case K::Call:
      for (const auto& k : n.kids) compile(*k, lay, code);
      if (n.name == "exp") code.push_back({Op::Exp});
      else if (n.name == "sin") code.push_back({Op::Sin});
      else if (n.name == "cos") code.push_back({Op::Cos});
      else if (n.name == "sqrt") code.push_back({Op::Sqrt});
      else code.push_back({Op::Gauss, 0.0, static_cast<int>(n.kids.size())});
      return;
  }
}

// Shared formulas so the plain path reproduces the jet constant terms bit for bit.
cplx recip(cplx a) {
  if (a == cplx(0.0)) throw DomainError("division by zero");
  return 1.0 / a;
}

cplx pow_int_plain(cplx a, int k) {
  if (k < 0) return recip(pow_int_plain(a, -k));
  cplx r = 1.0, base = a;
  while (k > 0) {
    if (k & 1) r = r * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return r;
}

cplx pow_real_plain(cplx a, cplx alpha) {
  if (a == cplx(0.0)) {
    if (alpha.real() > 0.0) return 0.0;
    throw DomainError("non-positive power of zero");
  }
  return std::exp(alpha * std::log(a));
}

}  // namespace

Program::Program(const Expr& e, const VarLayout& lay) : lay_(lay) {
  e.check_layout(lay);
  compile(e.root(), lay, code_);
  int depth = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::Const:
      case Op::Var: ++depth; break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: --depth; break;
      case Op::Gauss: depth -= in.arg - 1; break;
      default: break;
    }
    max_stack_ = std::max(max_stack_, depth);
  }
}

cplx Program::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != lay_.dim()) throw UsageError("point dimension does not match the expression layout");
  cplx local[32];
  std::vector<cplx> heap;
  cplx* st = local;
  if (max_stack_ > 32) {
    heap.resize(max_stack_);
    st = heap.data();
  }
  int sp = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::Const: st[sp++] = in.value; break;
      case Op::Var: st[sp++] = x[in.arg]; break;
      case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
      case Op::Add: st[sp - 2] = st[sp - 2] + st[sp - 1]; --sp; break;
      case Op::Sub: st[sp - 2] = st[sp - 2] - st[sp - 1]; --sp; break;
      case Op::Mul: st[sp - 2] = st[sp - 2] * st[sp - 1]; --sp; break;
      case Op::Div: st[sp - 2] = st[sp - 2] * recip(st[sp - 1]); --sp; break;
      case Op::PowInt: st[sp - 1] = pow_int_plain(st[sp - 1], in.arg); break;
      case Op::PowReal: st[sp - 1] = pow_real_plain(st[sp - 1], in.value); break;
      case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
      case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
      case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
      case Op::Sqrt: st[sp - 1] = pow_real_plain(st[sp - 1], 0.5); break;
      case Op::Gauss: {
        cplx s = 0.0;
        for (int q = sp - in.arg; q < sp; ++q) s = s + st[q] * st[q];
        sp -= in.arg;
        st[sp++] = std::exp(s * cplx(-0.5));
        break;
      }
    }
  }
  return st[0];
}

Jet Program::eval_jets(std::span<const Jet> in_jets) const {
  if (static_cast<int>(in_jets.size()) != lay_.dim()) throw UsageError("jet input count does not match the expression layout");
  if (in_jets.empty()) throw UsageError("expression layout has no coordinates");
  std::vector<Jet> st;
  st.reserve(max_stack_);
  const Jet& like = in_jets[0];
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::Const: st.push_back(Jet::constant_like(like, in.value)); break;
      case Op::Var: st.push_back(in_jets[in.arg]); break;
      case Op::Neg: st.back() = -st.back(); break;
      case Op::Add: st[st.size() - 2] += st.back(); st.pop_back(); break;
      case Op::Sub: st[st.size() - 2] -= st.back(); st.pop_back(); break;
      case Op::Mul: st[st.size() - 2] = jet_mul(st[st.size() - 2], st.back()); st.pop_back(); break;
      case Op::Div:
        if (st.back().value() == cplx(0.0)) throw DomainError("division by zero");
        st[st.size() - 2] = jet_div(st[st.size() - 2], st.back());
        st.pop_back();
        break;
      case Op::PowInt:
        if (in.arg < 0 && st.back().value() == cplx(0.0)) throw DomainError("negative power of zero");
        st.back() = jet_pow_int(st.back(), in.arg);
        break;
      case Op::PowReal: st.back() = jet_apply_unary(Elementary::Power, st.back(), in.value); break;
      case Op::Exp: st.back() = jet_apply_unary(Elementary::Exp, st.back()); break;
      case Op::Sin: st.back() = jet_apply_unary(Elementary::Sin, st.back()); break;
      case Op::Cos: st.back() = jet_apply_unary(Elementary::Cos, st.back()); break;
      case Op::Sqrt: st.back() = jet_apply_unary(Elementary::Power, st.back(), 0.5); break;
      case Op::Gauss: {
        const std::size_t base = st.size() - in.arg;
        Jet s = Jet::constant_like(like, 0.0);
        for (std::size_t q = base; q < st.size(); ++q) s += jet_mul(st[q], st[q]);
        st.resize(base);
        s *= cplx(-0.5);
        st.push_back(jet_apply_unary(Elementary::Exp, s));
        break;
      }
    }
  }
  return st.back();
}

cplx eval_plain(const Expr& e, std::span<const double> point, const VarLayout& lay) {
  return Program(e, lay).eval(point);
}

cplx eval_plain(const Expr& e, std::span<const double> point) {
  return eval_plain(e, point, e.natural_layout());
}

Jet eval_jet(const Expr& e, const std::vector<double>& center, const std::vector<int>& orders,
             const VarLayout& lay) {
  Program prog(e, lay);
  auto vars = jet_vars(center, orders);
  return prog.eval_jets(vars);
}

Jet eval_jet(const Expr& e, const std::vector<double>& center, const std::vector<int>& orders) {
  return eval_jet(e, center, orders, e.natural_layout());
}

namespace {

struct Deps {
  bool p = false, x = false;
};

Deps deps(const Node& n) {
  Deps d;
  if (n.kind == Node::Kind::Var) (n.var_kind == 'p' ? d.p : d.x) = true;
  for (const auto& k : n.kids) {
    Deps c = deps(*k);
    d.p = d.p || c.p;
    d.x = d.x || c.x;
  }
  return d;
}

NodePtr mul_nodes(const std::vector<NodePtr>& fs) {
  if (fs.empty()) return make_num(1.0);
  NodePtr r = fs[0];
  for (std::size_t q = 1; q < fs.size(); ++q) r = make(Node::Kind::Mul, {r, fs[q]});
  return r;
}

NodePtr add_nodes(const std::vector<NodePtr>& ts) {
  if (ts.empty()) return make_num(0.0);
  NodePtr r = ts[0];
  for (std::size_t q = 1; q < ts.size(); ++q) r = make(Node::Kind::Add, {r, ts[q]});
  return r;
}

// Factorizes n into p-only and x-only multiplicative pieces.
bool split_factor(const NodePtr& n, std::vector<NodePtr>& pf, std::vector<NodePtr>& xf) {
  using K = Node::Kind;
  const Deps d = deps(*n);
  if (!d.x) {
    pf.push_back(n);
    return true;
  }
  if (!d.p) {
    xf.push_back(n);
    return true;
  }
  switch (n->kind) {
    case K::Mul: return split_factor(n->kids[0], pf, xf) && split_factor(n->kids[1], pf, xf);
    case K::Neg:
      pf.push_back(make_num(-1.0));
      return split_factor(n->kids[0], pf, xf);
    case K::Div: {
      std::vector<NodePtr> pd, xd;
      if (!split_factor(n->kids[0], pf, xf)) return false;
      if (!split_factor(n->kids[1], pd, xd)) return false;
      if (!pd.empty()) pf.push_back(make(K::Div, {make_num(1.0), mul_nodes(pd)}));
      if (!xd.empty()) xf.push_back(make(K::Div, {make_num(1.0), mul_nodes(xd)}));
      return true;
    }
    case K::Pow: {
      std::vector<NodePtr> pb, xb;
      if (n->num != std::floor(n->num)) return false;
      if (!split_factor(n->kids[0], pb, xb)) return false;
      auto pw = [&](std::vector<NodePtr>& src, std::vector<NodePtr>& dst) {
        if (src.empty()) return;
        auto m = std::make_shared<Node>();
        m->kind = K::Pow;
        m->num = n->num;
        m->kids = {mul_nodes(src)};
        dst.push_back(m);
      };
      pw(pb, pf);
      pw(xb, xf);
      return true;
    }
    case K::Call: {
      if (n->name == "gauss") {
        std::vector<NodePtr> pa, xa;
        for (const auto& a : n->kids) {
          const Deps da = deps(*a);
          if (da.p && da.x) return false;
          (da.x ? xa : pa).push_back(a);
        }
        auto g = [&](std::vector<NodePtr>& args, std::vector<NodePtr>& dst) {
          if (args.empty()) return;
          auto m = std::make_shared<Node>();
          m->kind = K::Call;
          m->name = "gauss";
          m->kids = args;
          dst.push_back(m);
        };
        g(pa, pf);
        g(xa, xf);
        return true;
      }
      if (n->name == "exp") {
        // exp of a sum whose terms each depend on one side.
        std::vector<NodePtr> terms;
        std::function<bool(const NodePtr&, bool)> collect = [&](const NodePtr& t, bool neg) -> bool {
          if (t->kind == K::Add) return collect(t->kids[0], neg) && collect(t->kids[1], neg);
          if (t->kind == K::Sub) return collect(t->kids[0], neg) && collect(t->kids[1], !neg);
          if (t->kind == K::Neg) return collect(t->kids[0], !neg);
          const Deps dt = deps(*t);
          if (dt.p && dt.x) return false;
          terms.push_back(neg ? make(K::Neg, {t}) : t);
          return true;
        };
        if (!collect(n->kids[0], false)) return false;
        std::vector<NodePtr> pa, xa;
        for (const auto& t : terms) (deps(*t).x ? xa : pa).push_back(t);
        auto e = [&](std::vector<NodePtr>& args, std::vector<NodePtr>& dst) {
          if (args.empty()) return;
          auto m = std::make_shared<Node>();
          m->kind = K::Call;
          m->name = "exp";
          m->kids = {add_nodes(args)};
          dst.push_back(m);
        };
        e(pa, pf);
        e(xa, xf);
        return true;
      }
      return false;
    }
    default: return false;
  }
}

bool collect_terms(const NodePtr& n, bool neg, std::vector<SeparatedTerm>& out) {
  using K = Node::Kind;
  if (n->kind == K::Add) return collect_terms(n->kids[0], neg, out) && collect_terms(n->kids[1], neg, out);
  if (n->kind == K::Sub) return collect_terms(n->kids[0], neg, out) && collect_terms(n->kids[1], !neg, out);
  if (n->kind == K::Neg && deps(*n).p && deps(*n).x) return collect_terms(n->kids[0], !neg, out);
  std::vector<NodePtr> pf, xf;
  if (neg) pf.push_back(make_num(-1.0));
  if (!split_factor(n, pf, xf)) return false;
  out.push_back({mul_nodes(pf), mul_nodes(xf)});
  return true;
}

}  // namespace

std::vector<SeparatedTerm> separate_px(const Expr& e) {
  std::vector<SeparatedTerm> out;
  if (!collect_terms(e.root_ptr(), false, out)) return {};
  return out;
}

namespace {

NodePtr subst(const NodePtr& n, const VarMap& f) {
  if (n->kind == Node::Kind::Var) {
    if (NodePtr r = f(n->var_kind, n->var_index)) return r;
    return n;
  }
  if (n->kids.empty()) return n;
  auto c = std::make_shared<Node>(*n);
  for (auto& k : c->kids) k = subst(k, f);
  return c;
}

}  // namespace

Expr substitute(const Expr& e, const VarMap& f) { return Expr(subst(e.root_ptr(), f)); }

NodePtr num_node(double v) { return make_num(v); }

NodePtr var_node(char kind, int index) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Var;
  n->var_kind = kind;
  n->var_index = index;
  return n;
}

}  // namespace rdq::expr

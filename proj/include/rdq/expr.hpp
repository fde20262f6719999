#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rdq/errors.hpp"
#include "rdq/jets.hpp"

namespace rdq::expr {

struct Node {
  enum class Kind { Num, Imag, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Num;
  double num = 0.0;      // literal value, or the exponent of Pow
  char var_kind = 'x';   // 'x' or 'p'
  int var_index = 0;     // 1-based
  std::string name;      // function name for Call
  std::vector<std::shared_ptr<const Node>> kids;
};
using NodePtr = std::shared_ptr<const Node>;

struct ParseDiagnostic {
  std::size_t offset = 0;
  std::string message;
};

struct ParseError : UsageError {
  ParseError(const ParseDiagnostic& d)
      : UsageError("parse error at offset " + std::to_string(d.offset) + ": " + d.message), diag(d) {}
  ParseDiagnostic diag;
};

// Coordinates of a point: (p1..pn, x1..xn) when with_p, else (x1..xn).
struct VarLayout {
  int n = 1;
  bool with_p = false;
  int dim() const { return with_p ? 2 * n : n; }
};

class Expr {
 public:
  Expr() = default;
  explicit Expr(NodePtr root);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  int max_x() const { return max_x_; }
  int max_p() const { return max_p_; }
  // Smallest layout covering every variable in the expression.
  VarLayout natural_layout() const;
  // Throws UsageError if a variable does not fit in the layout.
  void check_layout(const VarLayout& lay) const;
  bool uses_p() const { return max_p_ > 0; }
  bool uses_x() const { return max_x_ > 0; }

 private:
  NodePtr root_;
  int max_x_ = 0;
  int max_p_ = 0;
};

std::variant<Expr, ParseDiagnostic> parse(std::string_view text);
Expr parse_or_throw(std::string_view text);
std::string to_string(const Expr& e);
bool same_tree(const Node& a, const Node& b);

// Flattened postfix program bound to a variable layout.
class Program {
 public:
  Program() = default;
  Program(const Expr& e, const VarLayout& lay);

  const VarLayout& layout() const { return lay_; }
  cplx eval(std::span<const double> point) const;
  Jet eval_jets(std::span<const Jet> inputs) const;

  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, PowInt, PowReal, Exp, Sin, Cos, Sqrt, Gauss };
  struct Instr {
    Op op;
    cplx value = 0.0;
    int arg = 0;  // variable index, integer exponent, or gauss arity
  };

 private:
  VarLayout lay_;
  std::vector<Instr> code_;
  int max_stack_ = 0;
};

cplx eval_plain(const Expr& e, std::span<const double> point, const VarLayout& lay);
cplx eval_plain(const Expr& e, std::span<const double> point);
Jet eval_jet(const Expr& e, const std::vector<double>& center, const std::vector<int>& orders,
             const VarLayout& lay);
Jet eval_jet(const Expr& e, const std::vector<double>& center, const std::vector<int>& orders);

// Splits e into sum_r u_r(p) * v_r(x) when every product term separates; empty otherwise.
struct SeparatedTerm {
  NodePtr p_part;  // depends on p only (or constant)
  NodePtr x_part;  // depends on x only (or constant)
};
std::vector<SeparatedTerm> separate_px(const Expr& e);

// Replaces variables: f(kind, index) returns the replacement node, or null to keep the variable.
using VarMap = std::function<NodePtr(char, int)>;
Expr substitute(const Expr& e, const VarMap& f);
NodePtr num_node(double v);
NodePtr var_node(char kind, int index);

}  // namespace rdq::expr

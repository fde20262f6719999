#pragma once

#include <random>
#include <sstream>
#include <string>

namespace rdq::testing {

// Random well-formed DSL expressions in x1..xk that stay finite and off branch cuts on [-2,2]^k.
class ExprGen {
 public:
  ExprGen(std::uint64_t seed, int k) : rng_(seed), k_(k) {}

  std::string next(int depth = 3) { return any(depth); }
  int k() const { return k_; }

 private:
  std::mt19937_64 rng_;
  int k_;

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::string num() {
    std::ostringstream os;
    os << (1 + pick(20)) / 10.0;
    return os.str();
  }
  std::string var() { return "x" + std::to_string(1 + pick(k_)); }

  std::string leaf(bool real) {
    switch (pick(real ? 3 : 4)) {
      case 0:
        return num();
      case 3:
        return "i";
      default:
        return var();
    }
  }

  std::string real_expr(int depth) {
    if (depth <= 0) return leaf(true);
    switch (pick(7)) {
      case 0:
        return "(" + real_expr(depth - 1) + " + " + real_expr(depth - 1) + ")";
      case 1:
        return "(" + real_expr(depth - 1) + " - " + real_expr(depth - 1) + ")";
      case 2:
        return real_expr(depth - 1) + "*" + real_expr(depth - 1);
      case 3:
        return "sin(" + real_expr(depth - 1) + ")";
      case 4:
        return "cos(" + real_expr(depth - 1) + ")";
      case 5:
        return "-" + leaf(true);
      default:
        return leaf(true);
    }
  }

  std::string any(int depth) {
    if (depth <= 0) return leaf(false);
    switch (pick(14)) {
      case 0:
        return "(" + any(depth - 1) + " + " + any(depth - 1) + ")";
      case 1:
        return "(" + any(depth - 1) + " - " + any(depth - 1) + ")";
      case 2:
        return any(depth - 1) + "*" + any(depth - 1);
      case 3:
        return "-(" + any(depth - 1) + ")";
      case 4:
        return "exp(" + any(depth - 1) + ")";
      case 5:
        return "sin(" + any(depth - 1) + ")";
      case 6:
        return "cos(" + any(depth - 1) + ")";
      case 7:
        return pick(2) ? "gauss(" + any(depth - 1) + ")" : "gauss(" + any(depth - 1) + ", " + var() + ")";
      case 8:
        return "sqrt(1 + (" + real_expr(depth - 1) + ")^2)";
      case 9:
        return "(1 + (" + real_expr(depth - 1) + ")^2)^" + std::to_string(pick(5) - 2) + ".5";
      case 10:
        return any(depth - 1) + "/(i + " + real_expr(depth - 1) + ")";
      case 11:
        return any(depth - 1) + "/(1 + (" + real_expr(depth - 1) + ")^2)";
      case 12:
        return "(" + any(depth - 1) + ")^" + std::to_string(pick(4));
      default:
        return leaf(false);
    }
  }
};

}  // namespace rdq::testing

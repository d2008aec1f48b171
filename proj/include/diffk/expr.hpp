#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diffk {

/// Scalar expression over the variables t, x1..xn and parameters p1..pm.
///
/// Grammar (lowest to highest precedence):
///   sum   := prod (('+' | '-') prod)*
///   prod  := unary (('*' | '/') unary)*
///   unary := '-' unary | power
///   power := atom ('^' unary)?          (right associative)
///   atom  := number | ident | func '(' sum ')' | '(' sum ')'
/// with func one of sin, cos, exp, tanh.
class ScalarExpr {
 public:
  enum class Kind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Tanh };
  enum class VarKind { Time, Space, Param };

  struct Node {
    Kind kind = Kind::Const;
    double value = 0.0;          // Const
    VarKind var = VarKind::Time;  // Var
    int index = 0;               // Var: 1-based for x and p
    std::shared_ptr<const Node> lhs, rhs;  // rhs unused for unary nodes
  };

  ScalarExpr();  // the constant 0

  /// Throws ParseError (with byte offset) on malformed input or unknown identifiers.
  static ScalarExpr parse(std::string_view src);
  static ScalarExpr constant(double c);

  /// Throws EvaluationError on division by zero, an undefined power or a
  /// non-finite result, and DimensionError when a referenced variable is missing.
  double eval(double t, std::span<const double> x, std::span<const double> p = {}) const;

  /// Minimal-parenthesis rendering that parses back to the same tree.
  std::string to_string() const;
  /// Constructor-style rendering, e.g. Mul(Var x1, Sub(Const 1, Var x1)).
  std::string structure() const;

  int max_space_index() const noexcept { return max_x_; }
  int max_param_index() const noexcept { return max_p_; }
  bool uses_time() const noexcept { return uses_t_; }
  const Node& root() const noexcept { return *root_; }

 private:
  struct Instr {
    Kind kind;
    VarKind var;
    int index;
    double value;
  };

  explicit ScalarExpr(std::shared_ptr<const Node> root);
  void compile();

  std::shared_ptr<const Node> root_;
  std::vector<Instr> program_;  // postfix
  int stack_depth_ = 1;
  int max_x_ = 0;
  int max_p_ = 0;
  bool uses_t_ = false;
};

}  // namespace diffk

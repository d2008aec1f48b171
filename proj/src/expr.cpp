#include "diffk/expr.hpp"

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "diffk/errors.hpp"

namespace diffk {

namespace {

using Node = ScalarExpr::Node;
using NodePtr = std::shared_ptr<const Node>;
using Kind = ScalarExpr::Kind;

NodePtr make(Kind k, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr e = sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "', expected operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    NodePtr lhs = prod();
    for (;;) {
      if (accept('+')) lhs = make(Kind::Add, lhs, prod());
      else if (accept('-')) lhs = make(Kind::Sub, lhs, prod());
      else return lhs;
    }
  }

  NodePtr prod() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Kind::Mul, lhs, unary());
      else if (accept('/')) lhs = make(Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input, expected operand");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "', expected operand");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    double v = 0.0;
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->value = v;
    (void)start;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    static constexpr std::array<std::pair<std::string_view, Kind>, 4> funcs{
        {{"sin", Kind::Sin}, {"cos", Kind::Cos}, {"exp", Kind::Exp}, {"tanh", Kind::Tanh}}};
    for (const auto& [fname, kind] : funcs) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after function name");
        NodePtr arg = sum();
        if (!accept(')')) fail("expected ')'");
        return make(kind, arg);
      }
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    if (name == "t") {
      n->var = ScalarExpr::VarKind::Time;
      return n;
    }
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'p')) {
      int idx = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec == std::errc() && ptr == name.data() + name.size() && idx >= 1) {
        n->var = name[0] == 'x' ? ScalarExpr::VarKind::Space : ScalarExpr::VarKind::Param;
        n->index = idx;
        return n;
      }
    }
    throw ParseError(start, "unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

int precedence(Kind k) {
  switch (k) {
    case Kind::Add:
    case Kind::Sub:
      return 1;
    case Kind::Mul:
    case Kind::Div:
      return 2;
    case Kind::Neg:
      return 3;
    case Kind::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

std::string var_name(const Node& n) {
  switch (n.var) {
    case ScalarExpr::VarKind::Time:
      return "t";
    case ScalarExpr::VarKind::Space:
      return "x" + std::to_string(n.index);
    case ScalarExpr::VarKind::Param:
      return "p" + std::to_string(n.index);
  }
  return "?";
}

const char* func_name(Kind k) {
  switch (k) {
    case Kind::Sin:
      return "sin";
    case Kind::Cos:
      return "cos";
    case Kind::Exp:
      return "exp";
    case Kind::Tanh:
      return "tanh";
    default:
      return "";
  }
}

const char* op_symbol(Kind k) {
  switch (k) {
    case Kind::Add:
      return "+";
    case Kind::Sub:
      return "-";
    case Kind::Mul:
      return "*";
    case Kind::Div:
      return "/";
    case Kind::Pow:
      return "^";
    default:
      return "";
  }
}

std::string render(const Node& n);

std::string wrap(const Node& n, bool parens) {
  return parens ? "(" + render(n) + ")" : render(n);
}

std::string render(const Node& n) {
  switch (n.kind) {
    case Kind::Const:
      return format_number(n.value);
    case Kind::Var:
      return var_name(n);
    case Kind::Neg:
      return "-" + wrap(*n.lhs, precedence(n.lhs->kind) < 3);
    case Kind::Sin:
    case Kind::Cos:
    case Kind::Exp:
    case Kind::Tanh:
      return std::string(func_name(n.kind)) + "(" + render(*n.lhs) + ")";
    case Kind::Pow:
      return wrap(*n.lhs, precedence(n.lhs->kind) <= 4) + "^" + wrap(*n.rhs, precedence(n.rhs->kind) < 3);
    default: {
      const int p = precedence(n.kind);
      return wrap(*n.lhs, precedence(n.lhs->kind) < p) + op_symbol(n.kind) +
             wrap(*n.rhs, precedence(n.rhs->kind) <= p);
    }
  }
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Const: return "Const";
    case Kind::Var: return "Var";
    case Kind::Neg: return "Neg";
    case Kind::Add: return "Add";
    case Kind::Sub: return "Sub";
    case Kind::Mul: return "Mul";
    case Kind::Div: return "Div";
    case Kind::Pow: return "Pow";
    case Kind::Sin: return "Sin";
    case Kind::Cos: return "Cos";
    case Kind::Exp: return "Exp";
    case Kind::Tanh: return "Tanh";
  }
  return "?";
}

std::string render_structure(const Node& n) {
  if (n.kind == Kind::Const) return "Const " + format_number(n.value);
  if (n.kind == Kind::Var) return "Var " + var_name(n);
  std::string s = kind_name(n.kind) + "(" + render_structure(*n.lhs);
  if (n.rhs) s += ", " + render_structure(*n.rhs);
  return s + ")";
}

}  // namespace

ScalarExpr::ScalarExpr() : ScalarExpr(make(Kind::Const)) {}

ScalarExpr::ScalarExpr(std::shared_ptr<const Node> root) : root_(std::move(root)) { compile(); }

ScalarExpr ScalarExpr::parse(std::string_view src) { return ScalarExpr(Parser(src).parse()); }

ScalarExpr ScalarExpr::constant(double c) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = c;
  return ScalarExpr(std::move(n));
}

void ScalarExpr::compile() {
  program_.clear();
  int depth = 0;
  stack_depth_ = 1;
  auto emit = [&](auto&& self, const Node& n) -> void {
    if (n.lhs) self(self, *n.lhs);
    if (n.rhs) self(self, *n.rhs);
    program_.push_back({n.kind, n.var, n.index, n.value});
    if (n.kind == Kind::Const || n.kind == Kind::Var) ++depth;
    else if (n.rhs) --depth;
    stack_depth_ = std::max(stack_depth_, depth);
    if (n.kind == Kind::Var) {
      if (n.var == VarKind::Time) uses_t_ = true;
      else if (n.var == VarKind::Space) max_x_ = std::max(max_x_, n.index);
      else max_p_ = std::max(max_p_, n.index);
    }
  };
  emit(emit, *root_);
}

double ScalarExpr::eval(double t, std::span<const double> x, std::span<const double> p) const {
  if (static_cast<int>(x.size()) < max_x_)
    throw DimensionError("expression references x" + std::to_string(max_x_) + " but point has dimension " +
                         std::to_string(x.size()));
  if (static_cast<int>(p.size()) < max_p_)
    throw DimensionError("expression references p" + std::to_string(max_p_) + " but only " +
                         std::to_string(p.size()) + " parameters are bound");
  std::array<double, 32> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (stack_depth_ > static_cast<int>(small.size())) {
    large.resize(static_cast<std::size_t>(stack_depth_));
    stack = large.data();
  }
  int top = -1;
  for (const Instr& in : program_) {
    switch (in.kind) {
      case Kind::Const:
        stack[++top] = in.value;
        break;
      case Kind::Var:
        stack[++top] = in.var == VarKind::Time    ? t
                       : in.var == VarKind::Space ? x[static_cast<std::size_t>(in.index - 1)]
                                                  : p[static_cast<std::size_t>(in.index - 1)];
        break;
      case Kind::Neg:
        stack[top] = -stack[top];
        break;
      case Kind::Sin:
        stack[top] = std::sin(stack[top]);
        break;
      case Kind::Cos:
        stack[top] = std::cos(stack[top]);
        break;
      case Kind::Exp:
        stack[top] = std::exp(stack[top]);
        break;
      case Kind::Tanh:
        stack[top] = std::tanh(stack[top]);
        break;
      case Kind::Add:
        --top;
        stack[top] += stack[top + 1];
        break;
      case Kind::Sub:
        --top;
        stack[top] -= stack[top + 1];
        break;
      case Kind::Mul:
        --top;
        stack[top] *= stack[top + 1];
        break;
      case Kind::Div:
        --top;
        if (stack[top + 1] == 0.0) throw EvaluationError("division by zero in '" + to_string() + "'");
        stack[top] /= stack[top + 1];
        break;
      case Kind::Pow: {
        --top;
        const double base = stack[top];
        const double e = stack[top + 1];
        if (base == 0.0 && e < 0.0) throw EvaluationError("zero raised to a negative power in '" + to_string() + "'");
        if (base < 0.0 && e != std::round(e))
          throw EvaluationError("negative base with non-integer exponent in '" + to_string() + "'");
        stack[top] = (e == 2.0) ? base * base : std::pow(base, e);
        break;
      }
    }
  }
  const double r = stack[0];
  if (!std::isfinite(r)) throw EvaluationError("non-finite value in '" + to_string() + "'");
  return r;
}

std::string ScalarExpr::to_string() const { return render(*root_); }

std::string ScalarExpr::structure() const { return render_structure(*root_); }

}  // namespace diffk

#include "nnrk/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "nnrk/errors.hpp"

namespace nnrk {

struct Expression::Node {
  enum class Kind { Number, Variable, Unary, Binary, Call } kind{};
  double value = 0.0;
  std::string name;  // variable, operator or function name
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

NodePtr make_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Number;
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr n = comparison();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression '" << src_ << "': " << msg << " at offset " << pos_;
    throw Error(os.str());
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (src_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  NodePtr binary(std::string op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->name = std::move(op);
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr comparison() {
    NodePtr lhs = additive();
    for (;;) {
      std::string op;
      if (accept("<="))
        op = "<=";
      else if (accept(">="))
        op = ">=";
      else if (accept("=="))
        op = "==";
      else if (accept("!="))
        op = "!=";
      else if (accept("<"))
        op = "<";
      else if (accept(">"))
        op = ">";
      else
        return lhs;
      lhs = binary(op, lhs, additive());
    }
  }

  NodePtr additive() {
    NodePtr lhs = term();
    for (;;) {
      if (accept("+"))
        lhs = binary("+", lhs, term());
      else if (accept("-"))
        lhs = binary("-", lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept("*"))
        lhs = binary("*", lhs, unary());
      else if (accept("/"))
        lhs = binary("/", lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept("-")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Unary;
      n->name = "-";
      n->args = {unary()};
      return n;
    }
    if (accept("+")) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept("^")) return binary("^", base, unary());  // right associative
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (accept("(")) {
      NodePtr n = comparison();
      if (!accept(")")) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const std::string rest(src_.substr(pos_));
      double v = 0.0;
      try {
        v = std::stod(rest, &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return make_number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      std::string name(src_.substr(start, pos_ - start));
      if (accept("(")) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Call;
        n->name = name;
        if (!accept(")")) {
          do {
            n->args.push_back(comparison());
          } while (accept(","));
          if (!accept(")")) fail("expected ')' after arguments");
        }
        check_arity(*n);
        return n;
      }
      if (name == "pi") return make_number(std::numbers::pi);
      if (name == "e") return make_number(std::numbers::e);
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Variable;
      n->name = std::move(name);
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  void check_arity(const Node& n) const {
    static const std::vector<std::pair<std::string, std::size_t>> table = {
        {"sin", 1},  {"cos", 1}, {"tan", 1}, {"exp", 1}, {"log", 1},    {"sqrt", 1},
        {"abs", 1},  {"min", 2}, {"max", 2}, {"pow", 2}, {"ifelse", 3}, {"atan2", 2},
        {"tanh", 1}, {"sinh", 1}, {"cosh", 1}};
    for (const auto& [name, arity] : table) {
      if (name == n.name) {
        if (n.args.size() != arity) fail("wrong number of arguments to " + name);
        return;
      }
    }
    fail("unknown function " + n.name);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

double eval_node(const Node& n, const Expression::Variables& vars) {
  switch (n.kind) {
    case Node::Kind::Number:
      return n.value;
    case Node::Kind::Variable: {
      auto it = vars.find(n.name);
      if (it == vars.end()) throw Error("expression: unknown variable '" + n.name + "'");
      return it->second;
    }
    case Node::Kind::Unary:
      return -eval_node(*n.args[0], vars);
    case Node::Kind::Binary: {
      const double a = eval_node(*n.args[0], vars);
      const double b = eval_node(*n.args[1], vars);
      const std::string& op = n.name;
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "/") return a / b;
      if (op == "^") return std::pow(a, b);
      if (op == "<") return a < b ? 1.0 : 0.0;
      if (op == "<=") return a <= b ? 1.0 : 0.0;
      if (op == ">") return a > b ? 1.0 : 0.0;
      if (op == ">=") return a >= b ? 1.0 : 0.0;
      if (op == "==") return a == b ? 1.0 : 0.0;
      return a != b ? 1.0 : 0.0;
    }
    case Node::Kind::Call: {
      const std::string& f = n.name;
      if (f == "ifelse")
        return eval_node(*n.args[0], vars) != 0.0 ? eval_node(*n.args[1], vars)
                                                  : eval_node(*n.args[2], vars);
      const double a = eval_node(*n.args[0], vars);
      if (f == "sin") return std::sin(a);
      if (f == "cos") return std::cos(a);
      if (f == "tan") return std::tan(a);
      if (f == "exp") return std::exp(a);
      if (f == "log") return std::log(a);
      if (f == "sqrt") return std::sqrt(a);
      if (f == "abs") return std::abs(a);
      if (f == "tanh") return std::tanh(a);
      if (f == "sinh") return std::sinh(a);
      if (f == "cosh") return std::cosh(a);
      const double b = eval_node(*n.args[1], vars);
      if (f == "min") return std::min(a, b);
      if (f == "max") return std::max(a, b);
      if (f == "pow") return std::pow(a, b);
      return std::atan2(a, b);
    }
  }
  return 0.0;
}

}  // namespace

Expression::Expression() : Expression(0.0) {}

Expression::Expression(std::string_view source)
    : source_(source), root_(Parser(source).parse()) {}

Expression::Expression(double constant) : root_(make_number(constant)) {
  std::ostringstream os;
  os.precision(17);
  os << constant;
  source_ = os.str();
}

Expression::~Expression() = default;
Expression::Expression(const Expression&) = default;
Expression& Expression::operator=(const Expression&) = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

double Expression::eval(const Variables& vars) const { return eval_node(*root_, vars); }

bool Expression::is_constant_zero() const {
  return root_->kind == Node::Kind::Number && root_->value == 0.0;
}

}  // namespace nnrk

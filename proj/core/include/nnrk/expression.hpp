#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace nnrk {

/// Scalar arithmetic expression over named variables, used for boundary data,
/// body forces and exact solutions in run configs.
///
/// Grammar: numbers, identifiers, + - * / ^, comparisons (< <= > >= == !=),
/// parentheses, and the functions sin cos tan exp log sqrt abs min max pow
/// ifelse(cond, a, b). Constants `pi` and `e` are predefined.
class Expression {
 public:
  using Variables = std::map<std::string, double, std::less<>>;

  Expression();
  explicit Expression(std::string_view source);
  Expression(double constant);  // NOLINT(google-explicit-constructor)
  ~Expression();
  Expression(const Expression&);
  Expression& operator=(const Expression&);
  Expression(Expression&&) noexcept;
  Expression& operator=(Expression&&) noexcept;

  /// Throws nnrk::Error on unknown variables.
  double eval(const Variables& vars) const;
  const std::string& source() const { return source_; }
  bool is_constant_zero() const;

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace nnrk

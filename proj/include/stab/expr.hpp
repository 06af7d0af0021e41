#pragma once

#include <functional>
#include <memory>
#include <string>

#include "stab/types.hpp"

namespace stab {

// Compiled scalar expression over state variables x1..xn and disturbance
// variables d1..dm.  Grammar: + - * / ^, parentheses, real literals.  The
// single letter "s" is an alias for x1 so that scalar comparison functions
// can reuse the same parser.
class Expr {
public:
  Expr() = default;

  double eval(const Vec& x, const Vec& d) const;
  double eval(double s) const { return eval(Vec{s}, {}); }

  // highest 1-based variable index referenced (0 when unused)
  std::size_t max_x() const { return max_x_; }
  std::size_t max_d() const { return max_d_; }

  const std::string& text() const { return text_; }

  struct Node;

private:
  friend Expr parse_expr(const std::string&);
  std::shared_ptr<const Node> root_;
  std::size_t max_x_ = 0;
  std::size_t max_d_ = 0;
  std::string text_;
};

// Throws ConfigError with position information on malformed input.
Expr parse_expr(const std::string& text);

}  // namespace stab

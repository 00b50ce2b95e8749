#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace shiftmatch {

class HExprError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Tiny arithmetic expression over covariates and one outcome:
//   expr := term (('+'|'-') term)*
//   term := factor (('*'|'/') factor)*
//   factor := unary ('^' factor)?
//   unary := '-' unary | primary
//   primary := number | 'y' | 'x<k>' | ('sin'|'cos'|'exp') '(' expr ')' | '(' expr ')'
// Used to evaluate h(z, y) when a dataset carries raw outcomes but no label
// column.
class HExpr {
  public:
    static HExpr parse(const std::string& text, int d);

    double eval(std::span<const double> x, double y) const;

    HExpr(HExpr&&) noexcept;
    HExpr& operator=(HExpr&&) noexcept;
    ~HExpr();

    struct Node;

  private:
    explicit HExpr(std::unique_ptr<Node> root);
    std::unique_ptr<Node> root_;
};

}  // namespace shiftmatch

#pragma once

// Arithmetic expressions over the phase-space coordinates x1..xN.
//
// Grammar (standard precedence, '^' binds tighter than unary minus and is
// right-associative, so -x1^2 == -(x1^2) and 2^3^2 == 2^9):
//
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := ('+' | '-') unary | power
//   power   := primary [ '^' unary ]
//   primary := number | 'pi' | variable | function '(' expr ')' | '(' expr ')'
//   variable:= 'x' digit+          (1-based, at most the declared dimension)
//   function:= sin | cos | exp | sqrt | abs | step     (step(a) = 1 if a > 0 else 0)

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "charflow/point.hpp"

namespace charflow {

class Expression {
public:
    /// Parses `text` for a space of `dimension` coordinates.
    /// Throws SyntaxError, UnknownIdentifier or a dimension_mismatch Error.
    static Expression parse(std::string_view text, std::size_t dimension);

    double evaluate(const Point& x) const noexcept;
    double operator()(const Point& x) const noexcept { return evaluate(x); }

    const std::string& text() const noexcept { return text_; }
    std::size_t dimension() const noexcept { return dimension_; }
    bool is_constant() const noexcept;

    enum class Op : unsigned char {
        push_const,
        push_var,
        add,
        sub,
        mul,
        div,
        pow,
        neg,
        sin,
        cos,
        exp,
        sqrt,
        abs,
        step,
    };

    struct Instr {
        Op op;
        unsigned index = 0;  // variable index for push_var
        double value = 0.0;  // literal for push_const
    };

private:
    std::string text_;
    std::size_t dimension_ = 0;
    std::vector<Instr> program_;  // postfix
    std::size_t max_stack_ = 0;

    friend class ExpressionParser;
};

}  // namespace charflow

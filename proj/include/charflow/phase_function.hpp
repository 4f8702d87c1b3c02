#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "charflow/expression.hpp"
#include "charflow/point.hpp"

namespace charflow {

/// A scalar function on phase space (f, g, psi or u). Cheap to copy; the
/// evaluator is shared.
class PhaseFunction {
public:
    using Evaluator = std::function<double(const Point&)>;

    PhaseFunction() : PhaseFunction(constant(0.0)) {}
    PhaseFunction(Evaluator eval, std::string description, std::optional<Box> support_hint = std::nullopt)
        : eval_(std::make_shared<Evaluator>(std::move(eval))),
          description_(std::move(description)),
          support_(std::move(support_hint)) {}

    static PhaseFunction constant(double c);
    static PhaseFunction from_expression(Expression e);
    /// Parses "expr:<expression>", "const:<number>" or a bare expression.
    static PhaseFunction parse(const std::string& text, std::size_t dimension);

    double operator()(const Point& x) const { return (*eval_)(x); }

    const std::string& description() const noexcept { return description_; }
    const std::optional<Box>& support_hint() const noexcept { return support_; }
    /// True for functions built by constant(c).
    std::optional<double> constant_value() const noexcept { return constant_; }

private:
    std::shared_ptr<Evaluator> eval_;
    std::string description_;
    std::optional<Box> support_;
    std::optional<double> constant_;
};

}  // namespace charflow

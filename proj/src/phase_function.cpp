#include "charflow/phase_function.hpp"

#include <sstream>

namespace charflow {

PhaseFunction PhaseFunction::constant(double c) {
    std::ostringstream os;
    os.precision(17);
    os << "const:" << c;
    PhaseFunction f([c](const Point&) { return c; }, os.str());
    f.constant_ = c;
    return f;
}

PhaseFunction PhaseFunction::from_expression(Expression e) {
    std::string text = "expr:" + e.text();
    if (e.is_constant()) {
        const double c = e.evaluate(Point(e.dimension()));
        PhaseFunction f = constant(c);
        f.description_ = std::move(text);
        return f;
    }
    return PhaseFunction([e = std::move(e)](const Point& x) { return e.evaluate(x); }, std::move(text));
}

PhaseFunction PhaseFunction::parse(const std::string& text, std::size_t dimension) {
    if (text.rfind("expr:", 0) == 0) return from_expression(Expression::parse(text.substr(5), dimension));
    if (text.rfind("const:", 0) == 0) return from_expression(Expression::parse(text.substr(6), dimension));
    return from_expression(Expression::parse(text, dimension));
}

}  // namespace charflow

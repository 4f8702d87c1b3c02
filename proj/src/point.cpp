#include "charflow/point.hpp"

#include <sstream>

#include "charflow/error.hpp"

namespace charflow {

void Point::throw_too_large(std::size_t n) {
    throw Error(ErrorKind::dimension_mismatch,
                "dimension " + std::to_string(n) + " exceeds the supported maximum " + std::to_string(kMaxDim));
}

Point::Point(std::initializer_list<double> values) : Point(values.size()) {
    std::copy(values.begin(), values.end(), v_.begin());
}

Point::Point(std::span<const double> values) : Point(values.size()) {
    std::copy(values.begin(), values.end(), v_.begin());
}

std::string Point::to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < n_; ++i) {
        if (i) os << ", ";
        os << v_[i];
    }
    os << ')';
    return os.str();
}

double Box::volume() const noexcept {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
}

bool Box::contains(const Point& x) const noexcept {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    }
    return true;
}

Box Box::inflated(const Point& margin) const noexcept {
    Box b = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        b.lo[i] -= margin[i];
        b.hi[i] += margin[i];
    }
    return b;
}

Box Box::intersect(const Box& other) const noexcept {
    Box b = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        b.lo[i] = std::max(lo[i], other.lo[i]);
        b.hi[i] = std::min(hi[i], other.hi[i]);
        if (b.hi[i] < b.lo[i]) b.hi[i] = b.lo[i];
    }
    return b;
}

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::syntax: return "SyntaxError";
        case ErrorKind::unknown_identifier: return "UnknownIdentifier";
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::non_finite_state: return "NonFiniteState";
        case ErrorKind::not_interior: return "NotInterior";
        case ErrorKind::not_on_boundary: return "NotOnBoundary";
        case ErrorKind::side_mismatch: return "SideMismatch";
        case ErrorKind::degenerate_side: return "DegenerateSide";
        case ErrorKind::undefined_normal: return "UndefinedNormal";
        case ErrorKind::empty_domain: return "EmptyDomain";
        case ErrorKind::stay_time_too_short: return "StayTimeTooShort";
        case ErrorKind::wrong_side: return "WrongSide";
        case ErrorKind::nonpositive_lambda: return "NonpositiveLambda";
        case ErrorKind::invalid_argument: return "InvalidArgument";
        case ErrorKind::unsupported: return "Unsupported";
        case ErrorKind::config: return "ConfigError";
    }
    return "Error";
}

SyntaxError::SyntaxError(std::size_t position, std::string token, const std::string& what)
    : Error(ErrorKind::syntax,
            "syntax error at position " + std::to_string(position) + " near '" + token +
                "': " + what),
      position_(position),
      token_(std::move(token)) {}

UnknownIdentifier::UnknownIdentifier(std::string name, std::size_t position)
    : Error(ErrorKind::unknown_identifier,
            "unknown identifier '" + name + "' at position " + std::to_string(position)),
      name_(std::move(name)),
      position_(position) {}

}  // namespace charflow

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace charflow {

enum class ErrorKind {
    syntax,
    unknown_identifier,
    dimension_mismatch,
    non_finite_state,
    not_interior,
    not_on_boundary,
    side_mismatch,
    degenerate_side,
    undefined_normal,
    empty_domain,
    stay_time_too_short,
    wrong_side,
    nonpositive_lambda,
    invalid_argument,
    unsupported,
    config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed expression; `position` is the 0-based character offset of the
/// offending token.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, std::string token, const std::string& what);

    std::size_t position() const noexcept { return position_; }
    const std::string& token() const noexcept { return token_; }

private:
    std::size_t position_;
    std::string token_;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(std::string name, std::size_t position);

    const std::string& name() const noexcept { return name_; }
    std::size_t position() const noexcept { return position_; }

private:
    std::string name_;
    std::size_t position_;
};

/// Configuration problem; `key()` names the offending config key (or the file path).
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(ErrorKind::config, key + ": " + message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace charflow

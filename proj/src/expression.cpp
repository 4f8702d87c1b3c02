#include "charflow/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>

#include "charflow/error.hpp"

namespace charflow {

namespace {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
    Tok kind;
    std::size_t pos;
    std::string text;
    double value = 0.0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::size_t start = pos_;
        if (pos_ >= src_.size()) return {Tok::end, start, "<end of input>"};

        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '_')) {
                ++pos_;
            }
            return {Tok::ident, start, std::string(src_.substr(start, pos_ - start))};
        }
        ++pos_;
        switch (c) {
            case '+': return {Tok::plus, start, "+"};
            case '-': return {Tok::minus, start, "-"};
            case '*': return {Tok::star, start, "*"};
            case '/': return {Tok::slash, start, "/"};
            case '^': return {Tok::caret, start, "^"};
            case '(': return {Tok::lparen, start, "("};
            case ')': return {Tok::rparen, start, ")"};
            default: break;
        }
        throw SyntaxError(start, std::string(1, c), "unexpected character");
    }

private:
    Token number(std::size_t start) {
        // digits [. digits] [(e|E) [+-] digits]
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) throw SyntaxError(start, ".", "malformed number");
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            const std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' for the next token
        }
        std::string text(src_.substr(start, pos_ - start));
        return {Tok::number, start, text, std::strtod(text.c_str(), nullptr)};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

std::optional<Expression::Op> function_op(const std::string& name) {
    using Op = Expression::Op;
    if (name == "sin") return Op::sin;
    if (name == "cos") return Op::cos;
    if (name == "exp") return Op::exp;
    if (name == "sqrt") return Op::sqrt;
    if (name == "abs") return Op::abs;
    if (name == "step") return Op::step;
    return std::nullopt;
}

}  // namespace

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, std::size_t dim) : lexer_(text), dim_(dim) {
        advance();
    }

    Expression run(std::string_view text) {
        expr();
        if (cur_.kind != Tok::end) throw SyntaxError(cur_.pos, cur_.text, "unexpected token");
        Expression e;
        e.text_ = std::string(text);
        e.dimension_ = dim_;
        e.program_ = std::move(program_);
        e.max_stack_ = max_depth_;
        return e;
    }

private:
    using Op = Expression::Op;

    void advance() { cur_ = lexer_.next(); }

    void emit(Expression::Instr in) {
        switch (in.op) {
            case Op::push_const:
            case Op::push_var: ++depth_; break;
            case Op::add:
            case Op::sub:
            case Op::mul:
            case Op::div:
            case Op::pow: --depth_; break;
            default: break;
        }
        max_depth_ = std::max(max_depth_, depth_);
        program_.push_back(in);
    }

    void expr() {
        term();
        while (cur_.kind == Tok::plus || cur_.kind == Tok::minus) {
            const Op op = cur_.kind == Tok::plus ? Op::add : Op::sub;
            advance();
            term();
            emit({op});
        }
    }

    void term() {
        unary();
        while (cur_.kind == Tok::star || cur_.kind == Tok::slash) {
            const Op op = cur_.kind == Tok::star ? Op::mul : Op::div;
            advance();
            unary();
            emit({op});
        }
    }

    void unary() {
        if (cur_.kind == Tok::minus) {
            advance();
            unary();
            emit({Op::neg});
        } else if (cur_.kind == Tok::plus) {
            advance();
            unary();
        } else {
            power();
        }
    }

    void power() {
        primary();
        if (cur_.kind == Tok::caret) {
            advance();
            unary();
            emit({Op::pow});
        }
    }

    void primary() {
        const Token tok = cur_;
        switch (tok.kind) {
            case Tok::number:
                advance();
                emit({Op::push_const, 0, tok.value});
                return;
            case Tok::lparen:
                advance();
                expr();
                expect(Tok::rparen, "expected ')'");
                return;
            case Tok::ident:
                advance();
                identifier(tok);
                return;
            default:
                throw SyntaxError(tok.pos, tok.text, "expected a number, variable, function or '('");
        }
    }

    void identifier(const Token& tok) {
        if (auto fn = function_op(tok.text)) {
            expect(Tok::lparen, "expected '(' after function name");
            expr();
            expect(Tok::rparen, "expected ')'");
            emit({*fn});
            return;
        }
        if (tok.text == "pi") {
            emit({Op::push_const, 0, std::numbers::pi});
            return;
        }
        if (tok.text.size() >= 2 && tok.text[0] == 'x' &&
            tok.text.find_first_not_of("0123456789", 1) == std::string::npos &&
            tok.text[1] != '0') {
            const unsigned long k = std::stoul(tok.text.substr(1));
            if (k > dim_) {
                throw Error(ErrorKind::dimension_mismatch,
                            "variable '" + tok.text + "' at position " + std::to_string(tok.pos) +
                                " exceeds dimension " + std::to_string(dim_));
            }
            emit({Op::push_var, static_cast<unsigned>(k - 1)});
            return;
        }
        throw UnknownIdentifier(tok.text, tok.pos);
    }

    void expect(Tok kind, const char* what) {
        if (cur_.kind != kind) throw SyntaxError(cur_.pos, cur_.text, what);
        advance();
    }

    Lexer lexer_;
    std::size_t dim_;
    Token cur_{Tok::end, 0, ""};
    std::vector<Expression::Instr> program_;
    std::size_t depth_ = 0;
    std::size_t max_depth_ = 0;
};

Expression Expression::parse(std::string_view text, std::size_t dimension) {
    if (dimension == 0 || dimension > kMaxDim) {
        throw Error(ErrorKind::dimension_mismatch,
                    "expression dimension must be in 1.." + std::to_string(kMaxDim));
    }
    return ExpressionParser(text, dimension).run(text);
}

bool Expression::is_constant() const noexcept {
    for (const auto& in : program_) {
        if (in.op == Op::push_var) return false;
    }
    return true;
}

double Expression::evaluate(const Point& x) const noexcept {
    if (program_.size() == 1) {
        const Instr& in = program_.front();
        return in.op == Op::push_var ? x[in.index] : in.value;
    }
    std::array<double, 64> small;
    small[0] = 0.0;
    std::vector<double> large;
    double* stack = small.data();
    if (max_stack_ > small.size()) {
        large.resize(max_stack_);
        stack = large.data();
    }
    std::size_t sp = 0;
    for (const Instr& in : program_) {
        switch (in.op) {
            case Op::push_const: stack[sp++] = in.value; break;
            case Op::push_var: stack[sp++] = x[in.index]; break;
            case Op::add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::div: --sp; stack[sp - 1] /= stack[sp]; break;
            case Op::pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
            case Op::neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Op::cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
            case Op::exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Op::sqrt: stack[sp - 1] = std::sqrt(stack[sp - 1]); break;
            case Op::abs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
            case Op::step: stack[sp - 1] = stack[sp - 1] > 0.0 ? 1.0 : 0.0; break;
        }
    }
    return stack[0];
}

}  // namespace charflow

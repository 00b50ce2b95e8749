#include "shiftmatch/hexpr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

namespace shiftmatch {

struct HExpr::Node {
    enum class Kind { constant, var_x, var_y, add, sub, mul, div, pow, neg, sin, cos, exp };
    Kind kind;
    double value = 0.0;  // constant
    int index = 0;       // var_x
    std::unique_ptr<Node> lhs, rhs;

    double eval(std::span<const double> x, double y) const {
        switch (kind) {
            case Kind::constant: return value;
            case Kind::var_x: return x[static_cast<std::size_t>(index)];
            case Kind::var_y: return y;
            case Kind::add: return lhs->eval(x, y) + rhs->eval(x, y);
            case Kind::sub: return lhs->eval(x, y) - rhs->eval(x, y);
            case Kind::mul: return lhs->eval(x, y) * rhs->eval(x, y);
            case Kind::div: return lhs->eval(x, y) / rhs->eval(x, y);
            case Kind::pow: return std::pow(lhs->eval(x, y), rhs->eval(x, y));
            case Kind::neg: return -lhs->eval(x, y);
            case Kind::sin: return std::sin(lhs->eval(x, y));
            case Kind::cos: return std::cos(lhs->eval(x, y));
            case Kind::exp: return std::exp(lhs->eval(x, y));
        }
        return 0.0;
    }
};

namespace {

struct Parser {
    const std::string& text;
    std::size_t pos = 0;
    int d;

    explicit Parser(const std::string& t, int dim) : text(t), d(dim) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw HExprError("h-expr: " + msg + " at position " + std::to_string(pos));
    }

    std::unique_ptr<HExpr::Node> make(HExpr::Node::Kind kind, std::unique_ptr<HExpr::Node> lhs = nullptr,
                                      std::unique_ptr<HExpr::Node> rhs = nullptr) {
        auto n = std::make_unique<HExpr::Node>();
        n->kind = kind;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    std::unique_ptr<HExpr::Node> parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (eat('+')) lhs = make(HExpr::Node::Kind::add, std::move(lhs), parse_term());
            else if (eat('-')) lhs = make(HExpr::Node::Kind::sub, std::move(lhs), parse_term());
            else return lhs;
        }
    }

    std::unique_ptr<HExpr::Node> parse_term() {
        auto lhs = parse_factor();
        for (;;) {
            if (eat('*')) lhs = make(HExpr::Node::Kind::mul, std::move(lhs), parse_factor());
            else if (eat('/')) lhs = make(HExpr::Node::Kind::div, std::move(lhs), parse_factor());
            else return lhs;
        }
    }

    std::unique_ptr<HExpr::Node> parse_factor() {
        auto base = parse_unary();
        if (eat('^')) return make(HExpr::Node::Kind::pow, std::move(base), parse_factor());
        return base;
    }

    std::unique_ptr<HExpr::Node> parse_unary() {
        if (eat('-')) return make(HExpr::Node::Kind::neg, parse_unary());
        return parse_primary();
    }

    std::unique_ptr<HExpr::Node> parse_primary() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of expression");
        const char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double v = 0.0;
            const char* begin = text.data() + pos;
            const char* end = text.data() + text.size();
            const auto res = std::from_chars(begin, end, v);
            if (res.ec != std::errc{}) fail("bad number");
            pos += static_cast<std::size_t>(res.ptr - begin);
            auto n = make(HExpr::Node::Kind::constant);
            n->value = v;
            return n;
        }
        if (eat('(')) {
            auto inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
                ++pos;
            }
            const std::string name = text.substr(start, pos - start);
            if (name == "y") return make(HExpr::Node::Kind::var_y);
            if (name.size() >= 2 && name[0] == 'x') {
                int idx = 0;
                const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
                if (res.ec == std::errc{} && res.ptr == name.data() + name.size()) {
                    if (idx < 1 || idx > d) fail("covariate " + name + " out of range (d = " + std::to_string(d) + ")");
                    auto n = make(HExpr::Node::Kind::var_x);
                    n->index = idx - 1;
                    return n;
                }
            }
            HExpr::Node::Kind kind;
            if (name == "sin") kind = HExpr::Node::Kind::sin;
            else if (name == "cos") kind = HExpr::Node::Kind::cos;
            else if (name == "exp") kind = HExpr::Node::Kind::exp;
            else fail("unknown identifier '" + name + "'");
            if (!eat('(')) fail("expected '(' after " + name);
            auto inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return make(kind, std::move(inner));
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

}  // namespace

HExpr HExpr::parse(const std::string& text, int d) {
    Parser p(text, d);
    auto root = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return HExpr(std::move(root));
}

double HExpr::eval(std::span<const double> x, double y) const { return root_->eval(x, y); }

HExpr::HExpr(std::unique_ptr<Node> root) : root_(std::move(root)) {}
HExpr::HExpr(HExpr&&) noexcept = default;
HExpr& HExpr::operator=(HExpr&&) noexcept = default;
HExpr::~HExpr() = default;

}  // namespace shiftmatch

#pragma once

#include <charconv>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "invfem/errors.hpp"
#include "invfem/tensor.hpp"

// Arithmetic expressions over the coordinates x, y, z, used for boundary
// condition and load definitions. Precedence ^ > unary minus > * / > + -,
// with ^ right-associative and the rest left-associative. For an inverse
// problem the coordinates are those of the deformed input mesh, for a
// forward problem those of the reference mesh.

namespace invfem {

class Expr {
public:
    Expr() { nodes_.push_back({Node::Number, 0.0, 0, 0, -1, -1}); }

    static Expr constant(double v) {
        Expr e;
        e.nodes_[0].value = v;
        return e;
    }

    static Expr parse(std::string_view text) {
        Expr e;
        e.nodes_.clear();
        Parser p{text, 0, &e};
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size())
            throw ParseError("syntax error at offset " + std::to_string(p.pos) +
                                 ": unexpected '" + std::string(1, text[p.pos]) + "'",
                             static_cast<long>(p.pos));
        e.text_ = std::string(text);
        return e;
    }

    double evaluate(const Vec3d& point) const { return eval(root_, point); }

    std::string to_string() const { return print(root_); }

    const std::string& source() const { return text_; }

    bool is_constant_zero() const {
        return nodes_.size() == 1 && nodes_[0].kind == Node::Number && nodes_[0].value == 0.0;
    }

private:
    struct Node {
        enum Kind { Number, Variable, Unary, Binary } kind;
        double value;  // Number
        int var;       // Variable: 0..2
        char op;       // Binary: + - * / ^
        int lhs, rhs;
    };

    std::vector<Node> nodes_;
    int root_ = 0;
    std::string text_;

    int add(Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    double eval(int id, const Vec3d& pt) const {
        const Node& n = nodes_[id];
        switch (n.kind) {
            case Node::Number: return n.value;
            case Node::Variable: return pt[n.var];
            case Node::Unary: return -eval(n.lhs, pt);
            case Node::Binary: {
                const double a = eval(n.lhs, pt);
                const double b = eval(n.rhs, pt);
                switch (n.op) {
                    case '+': return a + b;
                    case '-': return a - b;
                    case '*': return a * b;
                    case '/':
                        if (b == 0.0) throw EvalError("division by zero");
                        return a / b;
                    default: return std::pow(a, b);
                }
            }
        }
        return 0.0;
    }

    std::string print(int id) const {
        const Node& n = nodes_[id];
        switch (n.kind) {
            case Node::Number: {
                char buf[32];
                auto res = std::to_chars(buf, buf + sizeof(buf), n.value);
                return std::string(buf, res.ptr);
            }
            case Node::Variable: return std::string(1, "xyz"[n.var]);
            case Node::Unary: return "(-" + print(n.lhs) + ")";
            case Node::Binary:
                return "(" + print(n.lhs) + std::string(1, n.op) + print(n.rhs) + ")";
        }
        return {};
    }

    struct Parser {
        std::string_view text;
        std::size_t pos;
        Expr* out;

        [[noreturn]] void fail(const std::string& what) const {
            throw ParseError("syntax error at offset " + std::to_string(pos) + ": " + what,
                             static_cast<long>(pos));
        }

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        }

        bool peek(char c) {
            skip_ws();
            return pos < text.size() && text[pos] == c;
        }

        bool accept(char c) {
            if (!peek(c)) return false;
            ++pos;
            return true;
        }

        int parse_expr() {
            int lhs = parse_term();
            for (;;) {
                skip_ws();
                if (pos >= text.size()) break;
                const char c = text[pos];
                if (c != '+' && c != '-') break;
                ++pos;
                const int rhs = parse_term();
                lhs = out->add({Node::Binary, 0, 0, c, lhs, rhs});
            }
            return lhs;
        }

        int parse_term() {
            int lhs = parse_factor();
            for (;;) {
                skip_ws();
                if (pos >= text.size()) break;
                const char c = text[pos];
                if (c != '*' && c != '/') break;
                ++pos;
                const int rhs = parse_factor();
                lhs = out->add({Node::Binary, 0, 0, c, lhs, rhs});
            }
            return lhs;
        }

        int parse_factor() {
            if (accept('-')) {
                const int operand = parse_factor();
                return out->add({Node::Unary, 0, 0, 0, operand, -1});
            }
            return parse_power();
        }

        int parse_power() {
            const int base = parse_primary();
            if (accept('^')) {
                const int exponent = parse_factor();  // right-associative, unary allowed
                return out->add({Node::Binary, 0, 0, '^', base, exponent});
            }
            return base;
        }

        int parse_primary() {
            skip_ws();
            if (pos >= text.size()) fail("unexpected end of expression");
            const char c = text[pos];
            if (c == '(') {
                ++pos;
                const int inner = parse_expr();
                if (!accept(')')) fail("expected ')'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t end = pos;
                while (end < text.size() &&
                       std::isalnum(static_cast<unsigned char>(text[end])))
                    ++end;
                const std::string_view name = text.substr(pos, end - pos);
                int var = -1;
                if (name == "x") var = 0;
                else if (name == "y") var = 1;
                else if (name == "z") var = 2;
                if (var < 0)
                    throw ParseError("unknown identifier '" + std::string(name) + "' at offset " +
                                         std::to_string(pos),
                                     static_cast<long>(pos));
                pos = end;
                return out->add({Node::Variable, 0, var, 0, -1, -1});
            }
            fail(std::string("unexpected '") + c + "'");
        }

        int parse_number() {
            const char* begin = text.data() + pos;
            const char* end = text.data() + text.size();
            double value = 0;
            auto res = std::from_chars(begin, end, value);
            if (res.ec != std::errc{}) fail("malformed number");
            pos = static_cast<std::size_t>(res.ptr - text.data());
            return out->add({Node::Number, value, 0, 0, -1, -1});
        }
    };
};

}  // namespace invfem

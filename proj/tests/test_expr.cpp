#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cmath>
#include <memory>
#include <random>
#include <string>

#include "invfem/expr.hpp"

using invfem::EvalError;
using invfem::Expr;
using invfem::ParseError;
using invfem::Vec3d;

TEST_CASE("expression evaluation basics", "[expr]") {
    CHECK(Expr::parse("y*0.5").evaluate({0, 1, 0}) == 0.5);
    CHECK(Expr::parse("y^2*0.25").evaluate({0, 2, 0}) == 1.0);
    CHECK(Expr::parse("-(x+y)/2").evaluate({1, 1, 0}) == -1.0);
    CHECK(Expr::parse("2^3^2").evaluate({0, 0, 0}) == 512.0);  // right-associative
    CHECK(Expr::parse("x - y - z").evaluate({3, 2, 1}) == 0.0);  // left-associative
    CHECK(Expr::parse("1 + 2*3").evaluate({0, 0, 0}) == 7.0);
    CHECK(Expr::parse("-x^2").evaluate({2, 0, 0}) == -4.0);  // ^ binds tighter than unary -
}

TEST_CASE("expression errors", "[expr]") {
    CHECK_THROWS_AS(Expr::parse("1/0").evaluate({0, 0, 0}), EvalError);
    CHECK_THROWS_AS(Expr::parse("x/y").evaluate({1, 0, 0}), EvalError);
    CHECK_THROWS_AS(Expr::parse("foo+1"), ParseError);
    CHECK_THROWS_AS(Expr::parse("1+*2"), ParseError);
    CHECK_THROWS_AS(Expr::parse("(x"), ParseError);
    CHECK_THROWS_AS(Expr::parse(""), ParseError);

    try {
        Expr::parse("x + bogus");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.where() == 4);  // byte offset of the unknown identifier
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
}

namespace {

// Independent reference: the test builds its own random tree, evaluates it
// directly, and only then renders it to text for the parser.
struct RefNode {
    char op = 0;  // 0: leaf
    double number = 0;
    int var = -1;
    std::unique_ptr<RefNode> lhs, rhs;

    double eval(const Vec3d& p) const {
        if (!op) return var >= 0 ? p[var] : number;
        if (op == 'n') return -lhs->eval(p);
        const double a = lhs->eval(p), b = rhs->eval(p);
        switch (op) {
            case '+': return a + b;
            case '-': return a - b;
            case '*': return a * b;
            case '/':
                if (b == 0.0) throw EvalError("div0");
                return a / b;
            default: return std::pow(a, b);
        }
    }

    std::string text() const {
        if (!op) {
            if (var >= 0) return std::string(1, "xyz"[var]);
            char buf[32];
            auto res = std::to_chars(buf, buf + sizeof(buf), number);
            return std::string(buf, res.ptr);
        }
        if (op == 'n') return "(-" + lhs->text() + ")";
        return "(" + lhs->text() + " " + std::string(1, op) + " " + rhs->text() + ")";
    }
};

std::unique_ptr<RefNode> random_tree(std::mt19937& rng, int depth) {
    auto node = std::make_unique<RefNode>();
    std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 6);
    switch (kind(rng)) {
        case 0:
            node->number = std::uniform_real_distribution<double>(0.0, 9.5)(rng);
            break;
        case 1:
            node->var = std::uniform_int_distribution<int>(0, 2)(rng);
            break;
        case 2:
            node->op = 'n';
            node->lhs = random_tree(rng, depth - 1);
            break;
        case 3:
        case 4: {
            node->op = "+-*/"[std::uniform_int_distribution<int>(0, 3)(rng)];
            node->lhs = random_tree(rng, depth - 1);
            node->rhs = random_tree(rng, depth - 1);
            break;
        }
        default: {
            node->op = std::uniform_int_distribution<int>(0, 4)(rng) == 0 ? '^' : '*';
            node->lhs = random_tree(rng, depth - 1);
            if (node->op == '^') {
                node->rhs = std::make_unique<RefNode>();
                node->rhs->number = std::uniform_int_distribution<int>(0, 3)(rng);
            } else {
                node->rhs = random_tree(rng, depth - 1);
            }
            break;
        }
    }
    return node;
}

}  // namespace

TEST_CASE("random expressions match a reference evaluator bit for bit", "[expr]") {
    std::mt19937 rng(20240519);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto tree = random_tree(rng, 4);
        const std::string text = tree->text();
        const Expr parsed = Expr::parse(text);
        const Vec3d point{coord(rng), coord(rng), coord(rng)};

        bool ref_threw = false, got_threw = false;
        double ref = 0, got = 0;
        try {
            ref = tree->eval(point);
        } catch (const EvalError&) {
            ref_threw = true;
        }
        try {
            got = parsed.evaluate(point);
        } catch (const EvalError&) {
            got_threw = true;
        }
        REQUIRE(ref_threw == got_threw);
        if (!ref_threw) {
            const bool both_nan = std::isnan(ref) && std::isnan(got);
            if (!both_nan) REQUIRE(ref == got);
        }

        // parse-print-parse idempotence
        const std::string s1 = parsed.to_string();
        const std::string s2 = Expr::parse(s1).to_string();
        REQUIRE(s1 == s2);
    }
}

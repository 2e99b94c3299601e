#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace retarda {

/// Dimensions an expression may reference: state x[1..n], delayed values
/// xd[1..p][1..n], inputs u[1..m], and (for bound expressions) the radius r.
struct ExprDims {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t m = 0;
    bool allow_radius = false;
};

struct EvalContext {
    std::span<const double> x;
    std::span<const double> xd; // p blocks of n, delayed state k at xd[(k-1)*n ..]
    std::span<const double> u;
    double r = 0.0;
};

/// Arithmetic expression over the variables above. Parsed once, evaluated
/// many times; evaluation is pure and bit-deterministic for equal inputs.
///
/// Grammar: +, -, *, /, ^ (right associative), unary minus, parentheses,
/// number literals, and the functions exp, sin, cos, tanh, abs, sqrt,
/// min(a,b), max(a,b), pow(a,b), sat(a,b) = max(-b, min(a, b)).
class Expr {
public:
    static Expr parse(const std::string& text, const ExprDims& dims);

    double eval(const EvalContext& ctx) const;

    /// Canonical fully-parenthesized form; parse(print()) reproduces the AST.
    std::string print() const;

    bool operator==(const Expr& other) const;

private:
    enum class Op : std::uint8_t {
        Const, X, Xd, U, R,
        Add, Sub, Mul, Div, Pow, Neg,
        Exp, Sin, Cos, Tanh, Abs, Sqrt,
        Min, Max, Sat,
    };

    struct Node {
        Op op;
        double value = 0.0; // Const
        int a = -1;         // child / first operand
        int b = -1;         // second operand
        int idx1 = 0;       // 0-based component (X, U) or delay slot (Xd)
        int idx2 = 0;       // 0-based component for Xd
        bool operator==(const Node&) const = default;
    };

    friend class ExprParser;

    double eval_node(int id, const EvalContext& ctx) const;
    void print_node(int id, std::string& out) const;

    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace retarda

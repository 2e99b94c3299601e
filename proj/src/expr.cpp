#include "retarda/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "retarda/errors.hpp"

namespace retarda {

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

class ExprParser {
public:
    ExprParser(const std::string& text, const ExprDims& dims, Expr& out)
        : text_(text), dims_(dims), out_(out) {}

    void run() {
        out_.root_ = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
    }

private:
    using Op = Expr::Op;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!consume(c)) fail(std::string("expected '") + c + "'");
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    int add(Expr::Node node) {
        out_.nodes_.push_back(node);
        return static_cast<int>(out_.nodes_.size()) - 1;
    }

    int parse_sum() {
        int lhs = parse_product();
        for (;;) {
            if (consume('+'))
                lhs = add({Op::Add, 0.0, lhs, parse_product()});
            else if (consume('-'))
                lhs = add({Op::Sub, 0.0, lhs, parse_product()});
            else
                return lhs;
        }
    }

    int parse_product() {
        int lhs = parse_power();
        for (;;) {
            if (consume('*'))
                lhs = add({Op::Mul, 0.0, lhs, parse_power()});
            else if (consume('/'))
                lhs = add({Op::Div, 0.0, lhs, parse_power()});
            else
                return lhs;
        }
    }

    int parse_power() {
        int base = parse_unary();
        if (consume('^')) return add({Op::Pow, 0.0, base, parse_power()});
        return base;
    }

    int parse_unary() {
        if (consume('-')) return add({Op::Neg, 0.0, parse_unary()});
        if (consume('+')) return parse_unary();
        return parse_primary();
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            int e = parse_sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        fail("unexpected character");
    }

    int parse_number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return add({Op::Const, v});
    }

    int parse_index(std::size_t bound, const char* what) {
        expect('[');
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected index");
        long idx = std::strtol(text_.c_str() + start, nullptr, 10);
        expect(']');
        if (idx < 1 || static_cast<std::size_t>(idx) > bound)
            throw ParseError(std::string(what) + " index out of range", start);
        return static_cast<int>(idx - 1);
    }

    int parse_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name = text_.substr(start, pos_ - start);

        if (name == "x") return add({Op::X, 0.0, -1, -1, parse_index(dims_.n, "state")});
        if (name == "xd") {
            int k = parse_index(dims_.p, "delay");
            int i = parse_index(dims_.n, "delayed state");
            return add({Op::Xd, 0.0, -1, -1, k, i});
        }
        if (name == "u") {
            if (dims_.m == 0) throw ParseError("undeclared input", start);
            return add({Op::U, 0.0, -1, -1, parse_index(dims_.m, "input")});
        }
        if (name == "r") {
            if (!dims_.allow_radius) throw ParseError("'r' is only valid in bound expressions", start);
            return add({Op::R});
        }
        if (name == "pi") return add({Op::Const, 3.14159265358979323846});
        if (name == "e") return add({Op::Const, 2.71828182845904523536});

        auto unary = [&](Op op) {
            expect('(');
            int a = parse_sum();
            expect(')');
            return add({op, 0.0, a});
        };
        auto binary = [&](Op op) {
            expect('(');
            int a = parse_sum();
            expect(',');
            int b = parse_sum();
            expect(')');
            return add({op, 0.0, a, b});
        };

        if (name == "exp") return unary(Op::Exp);
        if (name == "sin") return unary(Op::Sin);
        if (name == "cos") return unary(Op::Cos);
        if (name == "tanh") return unary(Op::Tanh);
        if (name == "abs") return unary(Op::Abs);
        if (name == "sqrt") return unary(Op::Sqrt);
        if (name == "min") return binary(Op::Min);
        if (name == "max") return binary(Op::Max);
        if (name == "pow") return binary(Op::Pow);
        if (name == "sat") return binary(Op::Sat);

        throw ParseError("unknown identifier '" + name + "'", start);
    }

    const std::string& text_;
    ExprDims dims_;
    Expr& out_;
    std::size_t pos_ = 0;
};

Expr Expr::parse(const std::string& text, const ExprDims& dims) {
    Expr e;
    ExprParser(text, dims, e).run();
    return e;
}

double Expr::eval_node(int id, const EvalContext& ctx) const {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    switch (nd.op) {
        case Op::Const: return nd.value;
        case Op::X: return ctx.x[static_cast<std::size_t>(nd.idx1)];
        case Op::Xd:
            return ctx.xd[static_cast<std::size_t>(nd.idx1) * ctx.x.size() +
                          static_cast<std::size_t>(nd.idx2)];
        case Op::U: return ctx.u[static_cast<std::size_t>(nd.idx1)];
        case Op::R: return ctx.r;
        case Op::Add: return eval_node(nd.a, ctx) + eval_node(nd.b, ctx);
        case Op::Sub: return eval_node(nd.a, ctx) - eval_node(nd.b, ctx);
        case Op::Mul: return eval_node(nd.a, ctx) * eval_node(nd.b, ctx);
        case Op::Div: return eval_node(nd.a, ctx) / eval_node(nd.b, ctx);
        case Op::Pow: return std::pow(eval_node(nd.a, ctx), eval_node(nd.b, ctx));
        case Op::Neg: return -eval_node(nd.a, ctx);
        case Op::Exp: return std::exp(eval_node(nd.a, ctx));
        case Op::Sin: return std::sin(eval_node(nd.a, ctx));
        case Op::Cos: return std::cos(eval_node(nd.a, ctx));
        case Op::Tanh: return std::tanh(eval_node(nd.a, ctx));
        case Op::Abs: return std::abs(eval_node(nd.a, ctx));
        case Op::Sqrt: return std::sqrt(eval_node(nd.a, ctx));
        case Op::Min: return std::min(eval_node(nd.a, ctx), eval_node(nd.b, ctx));
        case Op::Max: return std::max(eval_node(nd.a, ctx), eval_node(nd.b, ctx));
        case Op::Sat: {
            double a = eval_node(nd.a, ctx);
            double b = eval_node(nd.b, ctx);
            return std::max(-b, std::min(a, b));
        }
    }
    return 0.0;
}

double Expr::eval(const EvalContext& ctx) const { return eval_node(root_, ctx); }

void Expr::print_node(int id, std::string& out) const {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    auto infix = [&](const char* sym) {
        out += '(';
        print_node(nd.a, out);
        out += sym;
        print_node(nd.b, out);
        out += ')';
    };
    auto call = [&](const char* fn, bool two) {
        out += fn;
        out += '(';
        print_node(nd.a, out);
        if (two) {
            out += ", ";
            print_node(nd.b, out);
        }
        out += ')';
    };
    switch (nd.op) {
        case Op::Const: out += format_number(nd.value); break;
        case Op::X: out += "x[" + std::to_string(nd.idx1 + 1) + "]"; break;
        case Op::Xd:
            out += "xd[" + std::to_string(nd.idx1 + 1) + "][" + std::to_string(nd.idx2 + 1) + "]";
            break;
        case Op::U: out += "u[" + std::to_string(nd.idx1 + 1) + "]"; break;
        case Op::R: out += "r"; break;
        case Op::Add: infix(" + "); break;
        case Op::Sub: infix(" - "); break;
        case Op::Mul: infix(" * "); break;
        case Op::Div: infix(" / "); break;
        case Op::Pow: call("pow", true); break;
        case Op::Neg:
            out += "(-";
            print_node(nd.a, out);
            out += ')';
            break;
        case Op::Exp: call("exp", false); break;
        case Op::Sin: call("sin", false); break;
        case Op::Cos: call("cos", false); break;
        case Op::Tanh: call("tanh", false); break;
        case Op::Abs: call("abs", false); break;
        case Op::Sqrt: call("sqrt", false); break;
        case Op::Min: call("min", true); break;
        case Op::Max: call("max", true); break;
        case Op::Sat: call("sat", true); break;
    }
}

std::string Expr::print() const {
    std::string out;
    print_node(root_, out);
    return out;
}

bool Expr::operator==(const Expr& other) const {
    // Structural equality: same shape under a canonical post-order. Node
    // vectors are built in parse order, which is deterministic for a given
    // string, so comparing printed forms is the robust definition.
    return print() == other.print();
}

} // namespace retarda

#pragma once

#include <cstddef>
#include <vector>

namespace retarda {

/// Dense univariate polynomial in the power basis: c[0] + c[1] t + c[2] t^2 + ...
/// An empty coefficient list is the zero polynomial.
class Poly {
public:
    Poly() = default;
    explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }
    static Poly constant(double v) { return v == 0.0 ? Poly() : Poly({v}); }

    const std::vector<double>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    int degree() const { return static_cast<int>(c_.size()) - 1; }

    double eval(double t) const;
    Poly derivative() const;

    Poly operator+(const Poly& other) const;
    Poly operator-(const Poly& other) const;
    Poly operator*(const Poly& other) const;
    Poly scaled(double a) const;

    /// p(a + b*t) as a polynomial in t.
    Poly compose_affine(double a, double b) const;

    bool operator==(const Poly& other) const { return c_ == other.c_; }

private:
    void trim();
    std::vector<double> c_;
};

/// All real roots of p in the closed interval [a, b], ascending, de-duplicated.
/// Isolation by recursion on critical points, then bisection; intended for the
/// low degrees (<= 12) that arise from piecewise histories and dense output.
std::vector<double> real_roots_in(const Poly& p, double a, double b);

/// Maximum of p over [a, b] (endpoints plus interior critical points).
double max_on_interval(const Poly& p, double a, double b);

} // namespace retarda

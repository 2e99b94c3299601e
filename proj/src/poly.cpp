#include "retarda/poly.hpp"

#include <algorithm>
#include <cmath>

namespace retarda {

void Poly::trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

double Poly::eval(double t) const {
    double acc = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) acc = acc * t + c_[i];
    return acc;
}

Poly Poly::derivative() const {
    if (c_.size() <= 1) return Poly();
    std::vector<double> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return Poly(std::move(d));
}

Poly Poly::operator+(const Poly& other) const {
    std::vector<double> r(std::max(c_.size(), other.c_.size()), 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < other.c_.size(); ++i) r[i] += other.c_[i];
    return Poly(std::move(r));
}

Poly Poly::operator-(const Poly& other) const {
    std::vector<double> r(std::max(c_.size(), other.c_.size()), 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < other.c_.size(); ++i) r[i] -= other.c_[i];
    return Poly(std::move(r));
}

Poly Poly::operator*(const Poly& other) const {
    if (c_.empty() || other.c_.empty()) return Poly();
    std::vector<double> r(c_.size() + other.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i)
        for (std::size_t j = 0; j < other.c_.size(); ++j) r[i + j] += c_[i] * other.c_[j];
    return Poly(std::move(r));
}

Poly Poly::scaled(double a) const {
    std::vector<double> r = c_;
    for (auto& x : r) x *= a;
    return Poly(std::move(r));
}

Poly Poly::compose_affine(double a, double b) const {
    // Horner in the composed argument: result = c[n] then result*(a+b t)+c[i].
    Poly arg({a, b});
    Poly result;
    for (std::size_t i = c_.size(); i-- > 0;) {
        result = result * arg + Poly::constant(c_[i]);
    }
    return result;
}

namespace {

// Bisection on a bracketing interval; p changes sign between lo and hi.
double bisect_root(const Poly& p, double lo, double hi) {
    double flo = p.eval(lo);
    if (flo == 0.0) return lo;
    double fhi = p.eval(hi);
    if (fhi == 0.0) return hi;
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double fm = p.eval(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0.0) != (fm < 0.0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

std::vector<double> real_roots_in(const Poly& p, double a, double b) {
    std::vector<double> roots;
    if (a > b) return roots;
    int deg = p.degree();
    if (deg <= 0) return roots; // zero or nonzero constant: no isolated roots reported
    if (deg == 1) {
        double r = -p.coeffs()[0] / p.coeffs()[1];
        if (r >= a && r <= b) roots.push_back(r);
        return roots;
    }

    // Interval endpoints plus the critical points of p partition [a, b] into
    // monotone pieces, each holding at most one root.
    std::vector<double> knots = real_roots_in(p.derivative(), a, b);
    knots.insert(knots.begin(), a);
    knots.push_back(b);

    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double lo = knots[i];
        double hi = knots[i + 1];
        if (hi <= lo) continue;
        double flo = p.eval(lo);
        double fhi = p.eval(hi);
        if (flo == 0.0) {
            roots.push_back(lo);
            continue;
        }
        if ((flo < 0.0) != (fhi <= 0.0)) {
            roots.push_back(bisect_root(p, lo, hi));
        }
    }
    if (!roots.empty() && p.eval(b) == 0.0 && roots.back() != b) roots.push_back(b);
    if (roots.empty() && p.eval(b) == 0.0) roots.push_back(b);

    std::sort(roots.begin(), roots.end());
    double span = std::max(1.0, std::max(std::abs(a), std::abs(b)));
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [span](double x, double y) { return std::abs(x - y) < 1e-14 * span; }),
                roots.end());
    return roots;
}

double max_on_interval(const Poly& p, double a, double b) {
    double best = std::max(p.eval(a), p.eval(b));
    for (double r : real_roots_in(p.derivative(), a, b)) best = std::max(best, p.eval(r));
    return best;
}

} // namespace retarda

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "retarda/poly.hpp"

namespace retarda {

/// One interval of a piecewise polynomial. The polynomial for each component
/// is stored in the local coordinate tau = s - from, and the piece owns the
/// half-open interval [from, to): its value at `to` is never read.
struct PiecePoly {
    double from = 0.0;
    double to = 0.0;
    std::vector<Poly> comp;

    double width() const { return to - from; }
};

/// Vector-valued piecewise polynomial on [start, end). Pieces are contiguous
/// and cover the domain exactly. Immutable after construction.
class PiecewisePoly {
public:
    PiecewisePoly() = default;
    PiecewisePoly(std::size_t dim, std::vector<PiecePoly> pieces);

    static PiecewisePoly constant(std::size_t dim, double from, double to,
                                  std::span<const double> value);
    static PiecewisePoly zero(std::size_t dim, double from, double to);

    std::size_t dim() const { return dim_; }
    double start() const { return pieces_.front().from; }
    double end() const { return pieces_.back().to; }
    const std::vector<PiecePoly>& pieces() const { return pieces_; }
    std::vector<double> breakpoints() const;

    /// Value at s in [start, end). The left endpoint of a piece is authoritative
    /// at interior breakpoints.
    std::vector<double> eval(double s) const;
    void eval_into(double s, std::span<double> out) const;

    /// Left limit at s in (start, end]: at an interior breakpoint this is the
    /// preceding piece's polynomial extended to its right endpoint, and s may
    /// equal the domain end. Integrators use this at the closing stage of a
    /// step so that a jump at the step boundary belongs to the next interval.
    void eval_left_into(double s, std::span<double> out) const;

    /// Exact essential supremum of the Euclidean norm over the domain,
    /// via critical points of |value|^2 on each piece.
    double ess_sup() const;

    /// Restriction to [a, b) (a sub-interval of the domain), pieces split as needed.
    PiecewisePoly restrict(double a, double b) const;

    /// Same function with the domain translated by dt: result(s) = this(s - dt).
    PiecewisePoly shifted(double dt) const;

    PiecewisePoly scaled(double factor) const;

    /// Pointwise difference over merged breakpoints (dims must match).
    PiecewisePoly operator-(const PiecewisePoly& other) const;

    /// Stack component blocks of several functions on a common domain.
    static PiecewisePoly stack(const std::vector<PiecewisePoly>& parts);

    /// Drop pieces narrower than tol, absorbing them into a neighbor.
    PiecewisePoly merged_close_breakpoints(double tol) const;

    std::size_t max_degree() const;

private:
    std::size_t piece_index(double s) const;

    std::size_t dim_ = 0;
    std::vector<PiecePoly> pieces_;
};

} // namespace retarda

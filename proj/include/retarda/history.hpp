#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "retarda/piecewise.hpp"

namespace retarda {

class Trajectory;

/// Strictly increasing positive delay values theta_1 < ... < theta_p.
class Delays {
public:
    explicit Delays(std::vector<double> values);

    std::size_t count() const { return values_.size(); }
    double max_delay() const { return values_.back(); }
    double min_delay() const { return values_.front(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }

    /// min(theta_1, min_{k != j} |theta_k - theta_j|): the largest window
    /// length for which the reduction between delayed and input-driven
    /// dynamics is conflict-free.
    double reduction_window() const;

private:
    std::vector<double> values_;
};

/// State with an essentially bounded past: a piecewise-polynomial function on
/// [-span, 0) plus an explicitly stored value at 0. The function part is
/// understood up to a.e. equality -- pieces live on half-open intervals and a
/// piece's value at its right endpoint is never read -- while the value at 0
/// is meaningful on its own and need not match the left limit.
class PiecewiseHistory {
public:
    PiecewiseHistory(PiecewisePoly fn, std::vector<double> point_value);

    static PiecewiseHistory constant(std::size_t dim, double span, std::span<const double> value);

    std::size_t dim() const { return point_value_.size(); }
    double span() const { return -fn_.start(); }
    const PiecewisePoly& fn() const { return fn_; }
    const std::vector<double>& point_value() const { return point_value_; }

    /// Value at s in [-span, 0]; s = 0 returns the stored point value.
    std::vector<double> eval(double s) const;

    /// max(ess-sup of the function part, |value at 0|), Euclidean on components.
    double norm() const;

    PiecewiseHistory scaled(double factor) const;

    /// Norm of the pointwise difference (function parts subtracted piecewise,
    /// point values subtracted directly).
    double distance(const PiecewiseHistory& other) const;

private:
    PiecewisePoly fn_;
    std::vector<double> point_value_;
};

/// Continuous history: adjacent pieces agree at breakpoints and the point
/// value equals the last piece's limit at 0 (validated to 1e-12 relative).
class ContinuousHistory {
public:
    explicit ContinuousHistory(PiecewisePoly fn);

    /// Continuous piecewise-linear interpolant through (breakpoints, knots).
    static ContinuousHistory piecewise_linear(const std::vector<double>& breakpoints,
                                              const std::vector<std::vector<double>>& knots);

    std::size_t dim() const { return fn_.dim(); }
    double span() const { return -fn_.start(); }
    const PiecewisePoly& fn() const { return fn_; }

    /// Embedding into the bounded-history state type; norms coincide.
    PiecewiseHistory embed() const;

private:
    PiecewisePoly fn_;
};

/// Value of the concatenated function (history then trajectory) at s:
/// history for s < 0, the shared value at s = 0, the trajectory for s > 0.
std::vector<double> eval_concat(const PiecewiseHistory& x0, const Trajectory& traj, double s);

/// The state at time t: theta in [-span, 0] |-> concatenation(t + theta),
/// with the trajectory value at t as the stored point value. Breakpoints
/// closer than 1e-12 after shifting are merged.
PiecewiseHistory segment_at(const PiecewiseHistory& x0, const Trajectory& traj, double t);

} // namespace retarda

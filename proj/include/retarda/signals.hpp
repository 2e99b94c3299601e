#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "retarda/history.hpp"
#include "retarda/piecewise.hpp"

namespace retarda {

class Trajectory;

/// Locally essentially bounded input on [0, infinity): an explicit
/// piecewise-polynomial part on [0, horizon) extended by zero beyond it.
/// Immutable; evaluation is reentrant.
class InputSignal {
public:
    explicit InputSignal(PiecewisePoly fn);

    static InputSignal zero(std::size_t dim, double horizon);
    static InputSignal constant(std::span<const double> value, double horizon);

    std::size_t dim() const { return dim_; }
    double horizon() const { return dim_ == 0 ? 0.0 : fn_.end(); }
    const PiecewisePoly& fn() const { return fn_; }

    std::vector<double> eval(double t) const;
    void eval_into(double t, std::span<double> out) const;

    /// Essential supremum of |u| over [0, horizon).
    double ess_sup() const;

    std::vector<double> breakpoints() const;

private:
    InputSignal() = default; // dim-0 signal
    std::size_t dim_ = 0;
    PiecewisePoly fn_;
    friend InputSignal empty_signal();
};

/// The unique signal with no components (for input-free systems).
InputSignal empty_signal();

/// Piecewise-constant random signal: `pieces` uniform segments on
/// [0, horizon), each value drawn uniformly from the radius-r Euclidean ball
/// (the interval [-r, r] when dim == 1). Deterministic in the seed, and
/// |u(t)| <= r by construction.
InputSignal sample_input(std::size_t dim, double r, double horizon, std::size_t pieces,
                         std::uint64_t seed);

/// result(t) = u(t0 + t). t0 must lie in [0, horizon]; the zero extension
/// beyond the horizon is preserved.
InputSignal shift_input(const InputSignal& u, double t0);

/// The delayed-state signal of the reduction to an input-driven system:
/// block k (of p, each n wide) is t |-> concatenation(t - theta_k),
/// represented exactly as piecewise polynomials on [0, traj.t_end()).
InputSignal delayed_input_signal(const PiecewiseHistory& x0, const Trajectory& traj,
                                 const Delays& delays);

} // namespace retarda

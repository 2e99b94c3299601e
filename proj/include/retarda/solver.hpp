#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "retarda/history.hpp"
#include "retarda/signals.hpp"
#include "retarda/system.hpp"
#include "retarda/trajectory.hpp"

namespace retarda {

struct SolveConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double escape_threshold = 1e12; // magnitude that counts as blow-up evidence
    double escape_step_floor = 1e-13; // controller step below this = collapse
    std::size_t max_steps = 5'000'000;

    void validate() const;
};

/// Union of the base kink times and all their forward images under the
/// delays, up to horizon T, de-duplicated with tolerance 1e-12.
std::vector<double> propagate_breakpoints(std::vector<double> base, const Delays& delays,
                                          double T, double tol = 1e-12);

/// Integrate the delay system from history x0 under input u over [0, T] by
/// the method of steps: delayed arguments are read from the history and the
/// already-accepted part of the solution, steps never exceed the smallest
/// delay, and every propagated breakpoint is hit exactly. Blow-up is reported
/// through the trajectory's escape record rather than an exception.
Trajectory solve_tds(const SystemDef& sys, const PiecewiseHistory& x0, const InputSignal& u,
                     double T, const SolveConfig& cfg = {});

/// Integrate the associated input-driven system z' = f(z, v(t), u(t)) from
/// z0, with steps clamped at the breakpoints of v and u. Same escape
/// semantics as solve_tds.
Trajectory solve_ode(const SystemDef& sys, std::span<const double> z0, const InputSignal& v,
                     const InputSignal& u, double T, const SolveConfig& cfg = {});

/// Build the initial history that replays the delayed-state signal v near
/// t = 0: on each window [-theta_k, -theta_k + delta) the history equals
/// v_k(. + theta_k), elsewhere zero, with value z0 at 0. Requires
/// 0 < delta < min(theta_1, min_{k != j} |theta_k - theta_j|), which keeps
/// the windows disjoint and away from 0.
PiecewiseHistory lift_history(const SystemDef& sys, std::span<const double> z0,
                              const InputSignal& v, double delta);

/// The state reached at time t: segment_at applied to a fresh solve.
/// Escape before t is an error here.
PiecewiseHistory flow_segment(const SystemDef& sys, const PiecewiseHistory& x0,
                              const InputSignal& u, double t, const SolveConfig& cfg = {});

namespace detail {

/// Right-hand side callback. `closing_stage` is true for stages evaluated at
/// the right end of the current step; histories and inputs with a jump there
/// must then return their left limit, because the jump belongs to the next
/// step's interval.
using RhsFn =
    std::function<void(double, std::span<const double>, std::span<double>, bool closing_stage)>;

/// Shared adaptive driver (embedded 5(4) pair with quartic dense output).
/// `stops` must be sorted times in (0, T]; integration lands on each exactly.
void integrate_adaptive(const RhsFn& rhs, std::span<const double> y0, double T,
                        const std::vector<double>& stops, double step_cap,
                        const SolveConfig& cfg, Trajectory& traj);

} // namespace detail

} // namespace retarda

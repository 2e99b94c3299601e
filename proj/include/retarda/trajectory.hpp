#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retarda/piecewise.hpp"

namespace retarda {

/// Dense-output segment of one accepted integration step over [t0, t0 + h).
/// Evaluation uses the quartic continuous extension
///   y(t0 + s h) = c1 + s (c2 + (1-s) (c3 + s (c4 + (1-s) c5))),  s in [0, 1],
/// stored per component as the rows of `cont`.
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<std::array<double, 5>> cont; // one row per component

    void eval(double t, std::span<double> out) const;
    void deriv(double t, std::span<double> out) const;

    /// The segment's component polynomials in the local time xi = t - t0.
    std::vector<Poly> local_polys() const;
};

struct EscapeRecord {
    double t_star = 0.0;          // last accepted time before detection
    double last_norm = 0.0;       // |x| at t_star
    double min_step = 0.0;        // step size at collapse
    bool rhs_overflow = false;    // detected via non-finite RHS, lower confidence
    std::string reason;
};

/// Dense solver output on [0, t_end]: contiguous accepted steps with local
/// interpolants, the propagated breakpoint set, and an optional escape record.
/// Step boundaries are kept in `nodes` (nodes[k] .. nodes[k+1] for segment k)
/// so that steps landing on a breakpoint carry its exact time.
class Trajectory {
public:
    Trajectory(std::size_t dim, std::vector<double> initial_value);

    std::size_t dim() const { return dim_; }
    double t_end() const { return nodes_.back(); }
    bool escaped() const { return escape_.has_value(); }
    const std::optional<EscapeRecord>& escape() const { return escape_; }
    const std::vector<DenseSegment>& segments() const { return segments_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    std::size_t steps_accepted() const { return segments_.size(); }
    std::size_t steps_rejected() const { return rejected_; }

    const std::vector<double>& initial_value() const { return initial_value_; }
    const std::vector<double>& final_value() const { return final_value_; }

    /// Value at t in [0, t_end]; the endpoint returns the final node exactly.
    std::vector<double> value(double t) const;
    void value_into(double t, std::span<double> out) const;

    /// Right derivative at t from the covering interpolant.
    std::vector<double> derivative(double t) const;

    /// Largest |x(t)| over node values and a uniform scan with `per_segment`
    /// extra samples inside each step (a lower bound on the true sup).
    double sup_norm(double t_from, double t_to, std::size_t per_segment = 4) const;

    /// The trajectory restricted to [a, b) as an explicit piecewise polynomial.
    PiecewisePoly to_piecewise(double a, double b) const;

    // Assembly interface used by the solver. `t_next` is the authoritative
    // end time of the appended step (exact when a breakpoint was hit).
    void append_segment(DenseSegment seg, std::vector<double> value_at_end, double t_next);
    void set_breakpoints(std::vector<double> bps) { breakpoints_ = std::move(bps); }
    void mark_escape(EscapeRecord rec) { escape_ = std::move(rec); }
    void add_rejected(std::size_t k) { rejected_ += k; }

private:
    std::size_t segment_index(double t) const;

    std::size_t dim_;
    std::vector<double> initial_value_;
    std::vector<double> final_value_;
    std::vector<DenseSegment> segments_;
    std::vector<double> nodes_{0.0};
    std::vector<double> breakpoints_;
    std::optional<EscapeRecord> escape_;
    std::size_t rejected_ = 0;
};

} // namespace retarda

#include "retarda/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "retarda/errors.hpp"

namespace retarda {

void SolveConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("tolerances must be positive");
    if (!(escape_threshold > 1.0)) throw DomainError("escape threshold must exceed 1");
    if (!(escape_step_floor > 0.0)) throw DomainError("escape step floor must be positive");
}

std::vector<double> propagate_breakpoints(std::vector<double> base, const Delays& delays,
                                          double T, double tol) {
    std::vector<double> sorted = std::move(base);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    auto contains = [&](const std::vector<double>& v, double x) {
        auto it = std::lower_bound(v.begin(), v.end(), x - tol);
        return it != v.end() && std::abs(*it - x) <= tol;
    };

    std::vector<double> frontier = sorted;
    while (!frontier.empty()) {
        std::vector<double> next;
        for (double b : frontier) {
            for (std::size_t k = 0; k < delays.count(); ++k) {
                double c = b + delays[k];
                if (c > T + tol) continue;
                if (!contains(sorted, c) && !contains(next, c)) {
                    next.insert(std::upper_bound(next.begin(), next.end(), c), c);
                }
            }
        }
        for (double c : next)
            sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), c), c);
        frontier = std::move(next);
    }
    return sorted;
}

namespace detail {

namespace {

// Dormand-Prince 5(4) tableau with the standard quartic continuous extension.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double euclid(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

struct Workspace {
    explicit Workspace(std::size_t n)
        : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n) {}
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, y1;
};

} // namespace

void integrate_adaptive(const RhsFn& rhs, std::span<const double> y0_in, double T,
                        const std::vector<double>& stops, double step_cap,
                        const SolveConfig& cfg, Trajectory& traj) {
    cfg.validate();
    if (!(T > 0.0)) throw DomainError("horizon must be positive");

    const std::size_t n = y0_in.size();
    Workspace ws(n);
    std::vector<double> y(y0_in.begin(), y0_in.end());
    double t = 0.0;

    rhs(t, y, ws.k1, false); // throws EvalOverflow only for a bad initial state

    auto scale = [&](std::size_t i, const std::vector<double>& ya, const std::vector<double>& yb) {
        return cfg.abs_tol + cfg.rel_tol * std::max(std::abs(ya[i]), std::abs(yb[i]));
    };

    std::size_t next_stop = 0;
    auto upcoming_stop = [&]() {
        while (next_stop < stops.size() && stops[next_stop] <= t) ++next_stop;
        return next_stop < stops.size() ? stops[next_stop] : T;
    };

    // Initial step size: standard two-evaluation heuristic, capped by the
    // first stop so delayed lookups stay in the accepted region.
    double h;
    {
        double cap = std::min({step_cap, cfg.max_step, upcoming_stop() - t});
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double sc = scale(i, y, y);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1n += (ws.k1[i] / sc) * (ws.k1[i] / sc);
        }
        d0 = std::sqrt(d0 / static_cast<double>(n));
        d1n = std::sqrt(d1n / static_cast<double>(n));
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, cap);
        try {
            for (std::size_t i = 0; i < n; ++i) ws.ytmp[i] = y[i] + h0 * ws.k1[i];
            rhs(t + h0, ws.ytmp, ws.k2, false);
            double d2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double sc = scale(i, y, y);
                double diff = (ws.k2[i] - ws.k1[i]) / sc;
                d2 += diff * diff;
            }
            d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
            double dmax = std::max(d1n, d2);
            double h1 = (dmax <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                        : std::pow(0.01 / dmax, 0.2);
            h = std::min({100.0 * h0, h1, cap});
        } catch (const EvalOverflow&) {
            h = std::min(1e-6, cap);
        }
    }

    constexpr double safety = 0.9, facmin = 0.2, facmax = 10.0, beta = 0.04;
    constexpr double expo1 = 0.2 - beta * 0.75;
    double facold = 1e-4;
    double h_controller = h;
    bool just_rejected = false;
    std::size_t rejected = 0;

    auto escape_now = [&](bool overflow, const char* why) {
        EscapeRecord rec;
        rec.t_star = t;
        rec.last_norm = euclid(y);
        rec.min_step = h_controller;
        rec.rhs_overflow = overflow;
        rec.reason = why;
        traj.mark_escape(rec);
        traj.add_rejected(rejected);
    };

    std::size_t steps = 0;
    while (t < T) {
        if (++steps > cfg.max_steps)
            throw NumericError("step budget exhausted at t = " + std::to_string(t));

        double stop = upcoming_stop();
        h = std::min({h_controller, step_cap, cfg.max_step, stop - t});
        bool hits_stop = (h >= stop - t - 1e-14 * std::max(1.0, std::abs(stop)));
        if (hits_stop) h = stop - t;

        if (!(h > 0.0) || t + h == t) {
            if (euclid(y) > cfg.escape_threshold) {
                escape_now(false, "step collapse at blow-up magnitude");
                return;
            }
            throw NumericError("step size vanished at t = " + std::to_string(t));
        }

        bool overflow = false;
        double err = 0.0;
        try {
            for (std::size_t i = 0; i < n; ++i) ws.ytmp[i] = y[i] + h * a21 * ws.k1[i];
            rhs(t + c2 * h, ws.ytmp, ws.k2, false);
            for (std::size_t i = 0; i < n; ++i)
                ws.ytmp[i] = y[i] + h * (a31 * ws.k1[i] + a32 * ws.k2[i]);
            rhs(t + c3 * h, ws.ytmp, ws.k3, false);
            for (std::size_t i = 0; i < n; ++i)
                ws.ytmp[i] = y[i] + h * (a41 * ws.k1[i] + a42 * ws.k2[i] + a43 * ws.k3[i]);
            rhs(t + c4 * h, ws.ytmp, ws.k4, false);
            for (std::size_t i = 0; i < n; ++i)
                ws.ytmp[i] = y[i] + h * (a51 * ws.k1[i] + a52 * ws.k2[i] + a53 * ws.k3[i] +
                                         a54 * ws.k4[i]);
            rhs(t + c5 * h, ws.ytmp, ws.k5, false);
            for (std::size_t i = 0; i < n; ++i)
                ws.ytmp[i] = y[i] + h * (a61 * ws.k1[i] + a62 * ws.k2[i] + a63 * ws.k3[i] +
                                         a64 * ws.k4[i] + a65 * ws.k5[i]);
            rhs(t + h, ws.ytmp, ws.k6, true);
            for (std::size_t i = 0; i < n; ++i)
                ws.y1[i] = y[i] + h * (b1 * ws.k1[i] + b3 * ws.k3[i] + b4 * ws.k4[i] +
                                       b5 * ws.k5[i] + b6 * ws.k6[i]);
            rhs(t + h, ws.y1, ws.k7, true);

            for (std::size_t i = 0; i < n; ++i) {
                double e = h * (e1 * ws.k1[i] + e3 * ws.k3[i] + e4 * ws.k4[i] + e5 * ws.k5[i] +
                                e6 * ws.k6[i] + e7 * ws.k7[i]);
                double q = e / scale(i, y, ws.y1);
                err += q * q;
            }
            err = std::sqrt(err / static_cast<double>(n));
        } catch (const EvalOverflow&) {
            overflow = true;
        }

        if (overflow || !std::isfinite(err)) {
            ++rejected;
            h_controller = h * 0.1;
            just_rejected = true;
            if (h_controller < cfg.escape_step_floor) {
                if (euclid(y) > cfg.escape_threshold || overflow) {
                    escape_now(overflow, overflow ? "rhs overflow under step collapse"
                                                  : "non-finite error estimate");
                    return;
                }
                throw NumericError("step collapse without blow-up at t = " + std::to_string(t));
            }
            continue;
        }

        if (err > 1.0) {
            ++rejected;
            double fac11 = std::pow(err, expo1);
            h_controller = h / std::min(1.0 / facmin, fac11 / safety);
            just_rejected = true;
            if (h_controller < cfg.escape_step_floor) {
                if (euclid(y) > cfg.escape_threshold) {
                    escape_now(false, "magnitude threshold with step collapse");
                    return;
                }
                throw NumericError("step collapse without blow-up at t = " + std::to_string(t));
            }
            continue;
        }

        // Accepted: assemble the dense segment for [t, t_next).
        double t_next = hits_stop ? stop : t + h;
        DenseSegment seg;
        seg.t0 = t;
        seg.h = t_next - t;
        seg.cont.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double ydiff = ws.y1[i] - y[i];
            double bspl = h * ws.k1[i] - ydiff;
            seg.cont[i][0] = y[i];
            seg.cont[i][1] = ydiff;
            seg.cont[i][2] = bspl;
            seg.cont[i][3] = ydiff - h * ws.k7[i] - bspl;
            seg.cont[i][4] = h * (d1 * ws.k1[i] + d3 * ws.k3[i] + d4 * ws.k4[i] + d5 * ws.k5[i] +
                                  d6 * ws.k6[i] + d7 * ws.k7[i]);
        }
        traj.append_segment(std::move(seg), ws.y1, t_next);

        t = t_next;
        y = ws.y1;
        if (hits_stop && t < T) {
            // The first-same-as-last stage was evaluated with left-limit
            // semantics; across a breakpoint the next step needs the right side.
            rhs(t, y, ws.k1, false);
        } else {
            ws.k1 = ws.k7;
        }

        double fac11 = std::pow(std::max(err, 1e-32), expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(1.0 / facmax, std::min(1.0 / facmin, fac / safety));
        double grown = h / fac;
        if (just_rejected) grown = std::min(grown, h);
        h_controller = grown;
        facold = std::max(err, 1e-4);
        just_rejected = false;

        if (h_controller < cfg.escape_step_floor && euclid(y) > cfg.escape_threshold) {
            escape_now(false, "magnitude threshold with step collapse");
            return;
        }
    }

    traj.add_rejected(rejected);
}

} // namespace detail

namespace {

std::vector<double> driver_stops(const std::vector<double>& propagated, double T) {
    std::vector<double> stops;
    for (double b : propagated)
        if (b > 0.0 && b < T) stops.push_back(b);
    stops.push_back(T);
    return stops;
}

std::vector<double> recorded_breakpoints(const std::vector<double>& propagated, double t_end) {
    std::vector<double> out;
    for (double b : propagated)
        if (b >= 0.0 && b < t_end) out.push_back(b);
    return out;
}

} // namespace

Trajectory solve_tds(const SystemDef& sys, const PiecewiseHistory& x0, const InputSignal& u,
                     double T, const SolveConfig& cfg) {
    const std::size_t n = sys.state_dim();
    const std::size_t p = sys.delay_count();
    if (x0.dim() != n) throw DomainError("history dimension mismatch");
    if (x0.span() != sys.max_delay())
        throw DomainError("history span must equal the largest delay");
    if (u.dim() != sys.input_dim()) throw DomainError("input dimension mismatch");

    std::vector<double> base = x0.fn().breakpoints();
    base.push_back(0.0);
    for (double b : u.breakpoints()) base.push_back(b);
    std::vector<double> propagated = propagate_breakpoints(std::move(base), sys.delays(), T);

    Trajectory traj(n, x0.point_value());

    std::vector<double> xd(n * p), ubuf(sys.input_dim());
    detail::RhsFn rhs = [&](double t, std::span<const double> y, std::span<double> dy,
                            bool closing) {
        for (std::size_t k = 0; k < p; ++k) {
            double tk = t - sys.delays()[k];
            std::span<double> slot(xd.data() + k * n, n);
            if (tk < 0.0) {
                if (closing)
                    x0.fn().eval_left_into(tk, slot);
                else
                    x0.fn().eval_into(tk, slot);
            } else if (tk == 0.0) {
                // Left of 0 the concatenation is the history's a.e. limit;
                // from 0 onward it starts at the stored point value.
                if (closing)
                    x0.fn().eval_left_into(0.0, slot);
                else
                    std::copy(x0.point_value().begin(), x0.point_value().end(), slot.begin());
            } else {
                traj.value_into(tk, slot);
            }
        }
        if (u.dim() > 0) {
            if (closing && t <= u.horizon())
                u.fn().eval_left_into(std::min(t, u.horizon()), ubuf);
            else
                u.eval_into(t, ubuf);
        }
        sys.eval_rhs(y, xd, ubuf, dy);
    };

    detail::integrate_adaptive(rhs, x0.point_value(), T, driver_stops(propagated, T),
                               sys.delays().min_delay(), cfg, traj);
    traj.set_breakpoints(recorded_breakpoints(propagated, traj.t_end()));
    return traj;
}

Trajectory solve_ode(const SystemDef& sys, std::span<const double> z0, const InputSignal& v,
                     const InputSignal& u, double T, const SolveConfig& cfg) {
    const std::size_t n = sys.state_dim();
    const std::size_t p = sys.delay_count();
    if (z0.size() != n) throw DomainError("initial state dimension mismatch");
    if (v.dim() != n * p) throw DomainError("delayed-input signal must have p*n components");
    if (u.dim() != sys.input_dim()) throw DomainError("input dimension mismatch");

    std::vector<double> base{0.0};
    for (double b : v.breakpoints()) base.push_back(b);
    for (double b : u.breakpoints()) base.push_back(b);
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());

    Trajectory traj(n, std::vector<double>(z0.begin(), z0.end()));

    std::vector<double> xd(n * p), ubuf(sys.input_dim());
    auto signal_eval = [](const InputSignal& sig, double t, std::span<double> out, bool closing) {
        if (sig.dim() == 0) return;
        if (closing && t <= sig.horizon())
            sig.fn().eval_left_into(std::min(t, sig.horizon()), out);
        else
            sig.eval_into(t, out);
    };
    detail::RhsFn rhs = [&](double t, std::span<const double> y, std::span<double> dy,
                            bool closing) {
        signal_eval(v, t, xd, closing);
        signal_eval(u, t, ubuf, closing);
        sys.eval_rhs(y, xd, ubuf, dy);
    };

    detail::integrate_adaptive(rhs, z0, T, driver_stops(base, T),
                               std::numeric_limits<double>::infinity(), cfg, traj);
    traj.set_breakpoints(recorded_breakpoints(base, traj.t_end()));
    return traj;
}

PiecewiseHistory lift_history(const SystemDef& sys, std::span<const double> z0,
                              const InputSignal& v, double delta) {
    const std::size_t n = sys.state_dim();
    const std::size_t p = sys.delay_count();
    if (z0.size() != n) throw DomainError("initial state dimension mismatch");
    if (v.dim() != n * p) throw DomainError("delayed-input signal must have p*n components");
    double window = sys.delays().reduction_window();
    if (!(delta > 0.0) || !(delta < window))
        throw DomainError("delta must lie strictly inside (0, " + std::to_string(window) + ")");
    if (v.horizon() < delta) throw DomainError("signal must be defined on [0, delta]");

    PiecewisePoly v_head = v.fn().restrict(0.0, delta);

    // Windows [-theta_k, -theta_k + delta) in ascending order (k = p .. 1),
    // zero in the gaps and after the last window.
    std::vector<PiecePoly> pieces;
    double cursor = -sys.max_delay();
    for (std::size_t k = p; k-- > 0;) {
        double w_start = -sys.delays()[k];
        if (cursor < w_start) {
            PiecePoly gap;
            gap.from = cursor;
            gap.to = w_start;
            gap.comp.assign(n, Poly());
            pieces.push_back(std::move(gap));
        }
        for (const auto& src : v_head.pieces()) {
            PiecePoly q;
            q.from = w_start + src.from;
            q.to = w_start + src.to;
            q.comp.assign(src.comp.begin() + static_cast<std::ptrdiff_t>(k * n),
                          src.comp.begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
            pieces.push_back(std::move(q));
        }
        cursor = w_start + delta;
    }
    if (cursor < 0.0) {
        PiecePoly tail;
        tail.from = cursor;
        tail.to = 0.0;
        tail.comp.assign(n, Poly());
        pieces.push_back(std::move(tail));
    }

    return PiecewiseHistory(PiecewisePoly(n, std::move(pieces)),
                            std::vector<double>(z0.begin(), z0.end()));
}

PiecewiseHistory flow_segment(const SystemDef& sys, const PiecewiseHistory& x0,
                              const InputSignal& u, double t, const SolveConfig& cfg) {
    if (t == 0.0) return x0;
    Trajectory traj = solve_tds(sys, x0, u, t, cfg);
    if (traj.escaped() || traj.t_end() < t)
        throw NumericError("trajectory escaped at t = " + std::to_string(traj.t_end()) +
                           " before the requested segment time");
    return segment_at(x0, traj, t);
}

} // namespace retarda

#include "retarda/signals.hpp"

#include <algorithm>
#include <cmath>

#include "retarda/errors.hpp"
#include "retarda/rng.hpp"
#include "retarda/trajectory.hpp"

namespace retarda {

InputSignal::InputSignal(PiecewisePoly fn) : dim_(fn.dim()), fn_(std::move(fn)) {
    if (fn_.start() != 0.0) throw DomainError("input signal must start at 0");
}

InputSignal empty_signal() { return InputSignal(); }

InputSignal InputSignal::zero(std::size_t dim, double horizon) {
    if (dim == 0) return empty_signal();
    return InputSignal(PiecewisePoly::zero(dim, 0.0, horizon));
}

InputSignal InputSignal::constant(std::span<const double> value, double horizon) {
    if (value.empty()) return empty_signal();
    return InputSignal(PiecewisePoly::constant(value.size(), 0.0, horizon, value));
}

void InputSignal::eval_into(double t, std::span<double> out) const {
    if (dim_ == 0) return;
    if (t < 0.0) throw DomainError("input evaluated at negative time");
    if (t >= fn_.end()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    fn_.eval_into(t, out);
}

std::vector<double> InputSignal::eval(double t) const {
    std::vector<double> out(dim_);
    eval_into(t, out);
    return out;
}

double InputSignal::ess_sup() const { return dim_ == 0 ? 0.0 : fn_.ess_sup(); }

std::vector<double> InputSignal::breakpoints() const {
    if (dim_ == 0) return {};
    return fn_.breakpoints();
}

InputSignal sample_input(std::size_t dim, double r, double horizon, std::size_t pieces,
                         std::uint64_t seed) {
    if (r < 0.0) throw DomainError("input radius must be nonnegative");
    if (pieces < 1) throw DomainError("at least one input piece required");
    if (!(horizon > 0.0)) throw DomainError("input horizon must be positive");
    if (dim == 0) return empty_signal();

    Rng rng(seed);
    std::vector<PiecePoly> out;
    out.reserve(pieces);
    double width = horizon / static_cast<double>(pieces);
    for (std::size_t i = 0; i < pieces; ++i) {
        PiecePoly p;
        p.from = static_cast<double>(i) * width;
        p.to = (i + 1 == pieces) ? horizon : static_cast<double>(i + 1) * width;
        auto value = rng.uniform_in_ball(dim, r);
        p.comp.reserve(dim);
        for (double v : value) p.comp.push_back(Poly::constant(v));
        out.push_back(std::move(p));
    }
    return InputSignal(PiecewisePoly(dim, std::move(out)));
}

InputSignal shift_input(const InputSignal& u, double t0) {
    if (t0 < 0.0) throw DomainError("shift must be nonnegative");
    if (u.dim() == 0 || t0 == 0.0) return u;
    if (t0 > u.horizon()) throw DomainError("shift beyond signal horizon");
    if (t0 == u.horizon()) return InputSignal::zero(u.dim(), 1.0);
    return InputSignal(u.fn().restrict(t0, u.horizon()).shifted(-t0));
}

InputSignal delayed_input_signal(const PiecewiseHistory& x0, const Trajectory& traj,
                                 const Delays& delays) {
    if (x0.span() != delays.max_delay())
        throw DomainError("history span must equal the largest delay");
    double T = traj.t_end();
    if (!(T > 0.0)) throw DomainError("trajectory has no forward extent");

    std::vector<PiecewisePoly> blocks;
    blocks.reserve(delays.count());
    for (std::size_t k = 0; k < delays.count(); ++k) {
        double theta = delays[k];
        if (theta >= T) {
            blocks.push_back(x0.fn().restrict(-theta, T - theta).shifted(theta));
            continue;
        }
        PiecewisePoly hist_part = x0.fn().restrict(-theta, 0.0).shifted(theta);
        PiecewisePoly traj_part = traj.to_piecewise(0.0, T - theta).shifted(theta);
        std::vector<PiecePoly> pieces = hist_part.pieces();
        for (const auto& p : traj_part.pieces()) pieces.push_back(p);
        blocks.emplace_back(x0.dim(), std::move(pieces));
    }
    return InputSignal(PiecewisePoly::stack(blocks).merged_close_breakpoints(1e-12));
}

} // namespace retarda

#include "retarda/history.hpp"

#include <algorithm>
#include <cmath>

#include "retarda/errors.hpp"
#include "retarda/trajectory.hpp"

namespace retarda {

namespace {

constexpr double kBreakpointMergeTol = 1e-12;
constexpr int kMaxPieceDegree = 5;

double euclid(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

void check_history_shape(const PiecewisePoly& fn) {
    if (fn.end() != 0.0) throw DomainError("history must end at 0");
    if (!(fn.start() < 0.0)) throw DomainError("history must have positive span");
    if (fn.max_degree() > kMaxPieceDegree)
        throw DomainError("history pieces support degree <= 5");
}

} // namespace

Delays::Delays(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("at least one delay required");
    double prev = 0.0;
    for (double v : values_) {
        if (!(v > 0.0)) throw DomainError("delays must be strictly positive");
        if (!(v > prev)) throw DomainError("duplicate delay");
        prev = v;
    }
}

double Delays::reduction_window() const {
    double w = values_.front();
    for (std::size_t i = 0; i + 1 < values_.size(); ++i)
        w = std::min(w, values_[i + 1] - values_[i]);
    return w;
}

PiecewiseHistory::PiecewiseHistory(PiecewisePoly fn, std::vector<double> point_value)
    : fn_(std::move(fn)), point_value_(std::move(point_value)) {
    check_history_shape(fn_);
    if (point_value_.size() != fn_.dim()) throw DomainError("point value dimension mismatch");
}

PiecewiseHistory PiecewiseHistory::constant(std::size_t dim, double span,
                                            std::span<const double> value) {
    return PiecewiseHistory(PiecewisePoly::constant(dim, -span, 0.0, value),
                            std::vector<double>(value.begin(), value.end()));
}

std::vector<double> PiecewiseHistory::eval(double s) const {
    if (s == 0.0) return point_value_;
    return fn_.eval(s);
}

double PiecewiseHistory::norm() const {
    return std::max(fn_.ess_sup(), euclid(point_value_));
}

PiecewiseHistory PiecewiseHistory::scaled(double factor) const {
    std::vector<double> pv = point_value_;
    for (auto& x : pv) x *= factor;
    return PiecewiseHistory(fn_.scaled(factor), std::move(pv));
}

double PiecewiseHistory::distance(const PiecewiseHistory& other) const {
    if (dim() != other.dim() || span() != other.span())
        throw DomainError("history shape mismatch");
    PiecewisePoly diff = fn_ - other.fn_;
    std::vector<double> dv(dim());
    for (std::size_t i = 0; i < dim(); ++i) dv[i] = point_value_[i] - other.point_value_[i];
    return std::max(diff.ess_sup(), euclid(dv));
}

ContinuousHistory::ContinuousHistory(PiecewisePoly fn) : fn_(std::move(fn)) {
    check_history_shape(fn_);
    const auto& pieces = fn_.pieces();
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
        const auto& a = pieces[i];
        const auto& b = pieces[i + 1];
        for (std::size_t d = 0; d < fn_.dim(); ++d) {
            double left_limit = a.comp[d].eval(a.width());
            double right = b.comp[d].eval(0.0);
            double scale = std::max({1.0, std::abs(left_limit), std::abs(right)});
            if (std::abs(left_limit - right) > 1e-12 * scale)
                throw DomainError("continuous history has a jump at an interior breakpoint");
        }
    }
}

ContinuousHistory ContinuousHistory::piecewise_linear(
    const std::vector<double>& breakpoints, const std::vector<std::vector<double>>& knots) {
    if (breakpoints.size() < 2 || knots.size() != breakpoints.size())
        throw DomainError("piecewise-linear history needs one knot per breakpoint");
    std::size_t dim = knots.front().size();
    std::vector<PiecePoly> pieces;
    pieces.reserve(breakpoints.size() - 1);
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        PiecePoly p;
        p.from = breakpoints[i];
        p.to = breakpoints[i + 1];
        if (!(p.from < p.to)) throw DomainError("breakpoints must increase");
        p.comp.reserve(dim);
        double w = p.to - p.from;
        for (std::size_t d = 0; d < dim; ++d) {
            if (knots[i].size() != dim || knots[i + 1].size() != dim)
                throw DomainError("knot dimension mismatch");
            p.comp.push_back(Poly({knots[i][d], (knots[i + 1][d] - knots[i][d]) / w}));
        }
        pieces.push_back(std::move(p));
    }
    return ContinuousHistory(PiecewisePoly(dim, std::move(pieces)));
}

PiecewiseHistory ContinuousHistory::embed() const {
    const auto& last = fn_.pieces().back();
    std::vector<double> pv(fn_.dim());
    for (std::size_t d = 0; d < fn_.dim(); ++d) pv[d] = last.comp[d].eval(last.width());
    return PiecewiseHistory(fn_, std::move(pv));
}

std::vector<double> eval_concat(const PiecewiseHistory& x0, const Trajectory& traj, double s) {
    if (s < -x0.span()) throw DomainError("concatenation evaluated before history start");
    if (s < 0.0) return x0.fn().eval(s);
    if (s == 0.0) return x0.point_value();
    return traj.value(s);
}

PiecewiseHistory segment_at(const PiecewiseHistory& x0, const Trajectory& traj, double t) {
    if (t < 0.0 || t > traj.t_end()) throw DomainError("segment time beyond trajectory");
    if (t == 0.0) return x0;
    double span = x0.span();

    PiecewisePoly window = [&] {
        if (t >= span) return traj.to_piecewise(t - span, t).shifted(-t);
        // History part on [-span, -t), trajectory part on [-t, 0).
        PiecewisePoly hist_part = x0.fn().restrict(t - span, 0.0).shifted(-t);
        PiecewisePoly traj_part = traj.to_piecewise(0.0, t).shifted(-t);
        std::vector<PiecePoly> pieces = hist_part.pieces();
        for (const auto& p : traj_part.pieces()) pieces.push_back(p);
        return PiecewisePoly(x0.dim(), std::move(pieces));
    }();

    return PiecewiseHistory(window.merged_close_breakpoints(kBreakpointMergeTol), traj.value(t));
}

} // namespace retarda

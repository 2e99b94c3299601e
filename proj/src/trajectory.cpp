#include "retarda/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "retarda/errors.hpp"

namespace retarda {

void DenseSegment::eval(double t, std::span<double> out) const {
    double s = (t - t0) / h;
    double s1 = 1.0 - s;
    for (std::size_t i = 0; i < cont.size(); ++i) {
        const auto& c = cont[i];
        out[i] = c[0] + s * (c[1] + s1 * (c[2] + s * (c[3] + s1 * c[4])));
    }
}

void DenseSegment::deriv(double t, std::span<double> out) const {
    double s = (t - t0) / h;
    for (std::size_t i = 0; i < cont.size(); ++i) {
        const auto& c = cont[i];
        // d/ds of c1 + c2 s + c3 s(1-s) + c4 s^2(1-s) + c5 s^2(1-s)^2
        double d = c[1] + (1.0 - 2.0 * s) * c[2] + (2.0 * s - 3.0 * s * s) * c[3] +
                   (2.0 * s - 6.0 * s * s + 4.0 * s * s * s) * c[4];
        out[i] = d / h;
    }
}

std::vector<Poly> DenseSegment::local_polys() const {
    // In s: c1 + (c2 + c3) s + (c4 + c5 - c3) s^2 - (c4 + 2 c5) s^3 + c5 s^4,
    // then s = xi / h.
    std::vector<Poly> out;
    out.reserve(cont.size());
    for (const auto& c : cont) {
        Poly in_s({c[0], c[1] + c[2], c[3] + c[4] - c[2], -c[3] - 2.0 * c[4], c[4]});
        out.push_back(in_s.compose_affine(0.0, 1.0 / h));
    }
    return out;
}

Trajectory::Trajectory(std::size_t dim, std::vector<double> initial_value)
    : dim_(dim), initial_value_(std::move(initial_value)), final_value_(initial_value_) {
    if (initial_value_.size() != dim_) throw DomainError("initial value dimension mismatch");
}

void Trajectory::append_segment(DenseSegment seg, std::vector<double> value_at_end,
                                double t_next) {
    if (!(t_next > nodes_.back())) throw DomainError("segments must advance time");
    segments_.push_back(std::move(seg));
    final_value_ = std::move(value_at_end);
    nodes_.push_back(t_next);
}

std::size_t Trajectory::segment_index(double t) const {
    if (segments_.empty()) throw DomainError("trajectory has no accepted steps");
    // Last node <= t gives the covering segment.
    std::size_t lo = 0;
    std::size_t hi = segments_.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (nodes_[mid] <= t)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

void Trajectory::value_into(double t, std::span<double> out) const {
    if (t == 0.0) {
        std::copy(initial_value_.begin(), initial_value_.end(), out.begin());
        return;
    }
    if (t == t_end()) {
        std::copy(final_value_.begin(), final_value_.end(), out.begin());
        return;
    }
    if (t < 0.0 || t > t_end()) throw DomainError("time outside trajectory domain");
    segments_[segment_index(t)].eval(t, out);
}

std::vector<double> Trajectory::value(double t) const {
    std::vector<double> out(dim_);
    value_into(t, out);
    return out;
}

std::vector<double> Trajectory::derivative(double t) const {
    if (segments_.empty()) throw DomainError("trajectory has no accepted steps");
    if (t < 0.0 || t > t_end()) throw DomainError("time outside trajectory domain");
    std::vector<double> out(dim_);
    std::size_t idx = (t == t_end()) ? segments_.size() - 1 : segment_index(t);
    segments_[idx].deriv(t, out);
    return out;
}

double Trajectory::sup_norm(double t_from, double t_to, std::size_t per_segment) const {
    auto norm_of = [&](std::span<const double> v) {
        double acc = 0.0;
        for (double x : v) acc += x * x;
        return std::sqrt(acc);
    };
    double best = 0.0;
    std::vector<double> buf(dim_);
    if (t_from <= 0.0) best = std::max(best, norm_of(initial_value_));
    if (t_to >= t_end()) best = std::max(best, norm_of(final_value_));
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        double lo = std::max(nodes_[k], t_from);
        double hi = std::min(nodes_[k + 1], t_to);
        if (!(lo <= hi)) continue;
        for (std::size_t j = 0; j <= per_segment + 1; ++j) {
            double t = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(per_segment + 1);
            segments_[k].eval(t, buf);
            best = std::max(best, norm_of(buf));
        }
    }
    return best;
}

PiecewisePoly Trajectory::to_piecewise(double a, double b) const {
    if (segments_.empty()) throw DomainError("trajectory has no accepted steps");
    if (a < 0.0 || b > t_end() + 1e-12 * std::max(1.0, t_end()) || !(a < b))
        throw DomainError("piecewise window outside trajectory domain");
    std::vector<PiecePoly> pieces;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        double from = std::max(nodes_[k], a);
        double to = std::min(nodes_[k + 1], b);
        if (!(from < to)) continue;
        PiecePoly p;
        p.from = from;
        p.to = to;
        auto polys = segments_[k].local_polys();
        p.comp.reserve(dim_);
        double shift = from - segments_[k].t0;
        for (auto& poly : polys)
            p.comp.push_back(shift == 0.0 ? poly : poly.compose_affine(shift, 1.0));
        pieces.push_back(std::move(p));
    }
    if (pieces.empty()) throw DomainError("piecewise window is empty");
    pieces.front().from = a;
    pieces.back().to = std::min(b, t_end());
    return PiecewisePoly(dim_, std::move(pieces));
}

} // namespace retarda

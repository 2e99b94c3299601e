#include "retarda/piecewise.hpp"

#include <algorithm>
#include <cmath>

#include "retarda/errors.hpp"

namespace retarda {

PiecewisePoly::PiecewisePoly(std::size_t dim, std::vector<PiecePoly> pieces)
    : dim_(dim), pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw DomainError("piecewise function needs at least one piece");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (!(p.from < p.to)) throw DomainError("piece interval must have positive width");
        if (p.comp.size() != dim_) throw DomainError("piece component count mismatch");
        if (i > 0 && pieces_[i - 1].to != p.from)
            throw DomainError("pieces must be contiguous");
    }
}

PiecewisePoly PiecewisePoly::constant(std::size_t dim, double from, double to,
                                      std::span<const double> value) {
    if (value.size() != dim) throw DomainError("constant value dimension mismatch");
    PiecePoly piece;
    piece.from = from;
    piece.to = to;
    piece.comp.reserve(dim);
    for (double v : value) piece.comp.push_back(Poly::constant(v));
    return PiecewisePoly(dim, {std::move(piece)});
}

PiecewisePoly PiecewisePoly::zero(std::size_t dim, double from, double to) {
    std::vector<double> zeros(dim, 0.0);
    return constant(dim, from, to, zeros);
}

std::vector<double> PiecewisePoly::breakpoints() const {
    std::vector<double> bps;
    bps.reserve(pieces_.size() + 1);
    for (const auto& p : pieces_) bps.push_back(p.from);
    bps.push_back(pieces_.back().to);
    return bps;
}

std::size_t PiecewisePoly::piece_index(double s) const {
    // Tiny slack below the domain start absorbs rounding in shifted lookups.
    if (s < start()) {
        if (s >= start() - 1e-12 * std::max(1.0, std::abs(start()))) return 0;
        throw DomainError("evaluation below domain start");
    }
    if (s >= end()) throw DomainError("evaluation at or beyond domain end");
    // Last piece whose from <= s.
    std::size_t lo = 0;
    std::size_t hi = pieces_.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (pieces_[mid].from <= s)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

void PiecewisePoly::eval_into(double s, std::span<double> out) const {
    const auto& p = pieces_[piece_index(s)];
    double tau = s - p.from;
    if (tau < 0.0) tau = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) out[i] = p.comp[i].eval(tau);
}

void PiecewisePoly::eval_left_into(double s, std::span<double> out) const {
    if (s > end() || s < start()) throw DomainError("left-limit evaluation outside domain");
    // Last piece with from < s; at the domain start fall back to the first piece.
    std::size_t lo = 0;
    std::size_t hi = pieces_.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (pieces_[mid].from < s)
            lo = mid;
        else
            hi = mid - 1;
    }
    const auto& p = pieces_[lo];
    double tau = std::max(0.0, s - p.from);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = p.comp[i].eval(tau);
}

std::vector<double> PiecewisePoly::eval(double s) const {
    std::vector<double> out(dim_);
    eval_into(s, out);
    return out;
}

double PiecewisePoly::ess_sup() const {
    double best = 0.0;
    for (const auto& p : pieces_) {
        Poly sq;
        for (const auto& c : p.comp) sq = sq + c * c;
        best = std::max(best, max_on_interval(sq, 0.0, p.width()));
    }
    return std::sqrt(std::max(0.0, best));
}

PiecewisePoly PiecewisePoly::restrict(double a, double b) const {
    double lo = std::max(a, start());
    if (!(lo < b) || b > end() + 1e-12 * std::max(1.0, std::abs(end())))
        throw DomainError("restriction window outside domain");
    double hi = std::min(b, end());
    std::vector<PiecePoly> out;
    for (const auto& p : pieces_) {
        double from = std::max(p.from, lo);
        double to = std::min(p.to, hi);
        if (!(from < to)) continue;
        PiecePoly q;
        q.from = from;
        q.to = to;
        q.comp.reserve(dim_);
        double shift = from - p.from;
        for (const auto& c : p.comp)
            q.comp.push_back(shift == 0.0 ? c : c.compose_affine(shift, 1.0));
        out.push_back(std::move(q));
    }
    // Seal the window bounds exactly so results remain contiguous downstream.
    out.front().from = lo;
    out.back().to = hi;
    return PiecewisePoly(dim_, std::move(out));
}

PiecewisePoly PiecewisePoly::shifted(double dt) const {
    std::vector<PiecePoly> out = pieces_;
    for (auto& p : out) {
        p.from += dt;
        p.to += dt;
    }
    return PiecewisePoly(dim_, std::move(out));
}

PiecewisePoly PiecewisePoly::scaled(double factor) const {
    std::vector<PiecePoly> out = pieces_;
    for (auto& p : out)
        for (auto& c : p.comp) c = c.scaled(factor);
    return PiecewisePoly(dim_, std::move(out));
}

namespace {

std::vector<double> merged_breakpoints(const PiecewisePoly& a, const PiecewisePoly& b) {
    std::vector<double> bps = a.breakpoints();
    auto more = b.breakpoints();
    bps.insert(bps.end(), more.begin(), more.end());
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    return bps;
}

} // namespace

PiecewisePoly PiecewisePoly::operator-(const PiecewisePoly& other) const {
    if (dim_ != other.dim_) throw DomainError("dimension mismatch in difference");
    if (start() != other.start() || end() != other.end())
        throw DomainError("domain mismatch in difference");
    auto bps = merged_breakpoints(*this, other);
    std::vector<PiecePoly> out;
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
        double from = bps[i];
        double to = bps[i + 1];
        if (!(from < to)) continue;
        const auto& pa = pieces_[piece_index(from)];
        const auto& pb = other.pieces_[other.piece_index(from)];
        PiecePoly q;
        q.from = from;
        q.to = to;
        q.comp.reserve(dim_);
        for (std::size_t d = 0; d < dim_; ++d) {
            Poly ca = pa.comp[d].compose_affine(from - pa.from, 1.0);
            Poly cb = pb.comp[d].compose_affine(from - pb.from, 1.0);
            q.comp.push_back(ca - cb);
        }
        out.push_back(std::move(q));
    }
    return PiecewisePoly(dim_, std::move(out));
}

PiecewisePoly PiecewisePoly::stack(const std::vector<PiecewisePoly>& parts) {
    if (parts.empty()) throw DomainError("nothing to stack");
    std::vector<double> bps = parts.front().breakpoints();
    for (std::size_t k = 1; k < parts.size(); ++k) {
        if (parts[k].start() != parts.front().start() || parts[k].end() != parts.front().end())
            throw DomainError("stacked parts must share a domain");
        auto more = parts[k].breakpoints();
        bps.insert(bps.end(), more.begin(), more.end());
    }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

    std::size_t dim = 0;
    for (const auto& part : parts) dim += part.dim();

    std::vector<PiecePoly> out;
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
        double from = bps[i];
        double to = bps[i + 1];
        if (!(from < to)) continue;
        PiecePoly q;
        q.from = from;
        q.to = to;
        q.comp.reserve(dim);
        for (const auto& part : parts) {
            const auto& p = part.pieces()[part.piece_index(from)];
            for (const auto& c : p.comp) q.comp.push_back(c.compose_affine(from - p.from, 1.0));
        }
        out.push_back(std::move(q));
    }
    return PiecewisePoly(dim, std::move(out));
}

PiecewisePoly PiecewisePoly::merged_close_breakpoints(double tol) const {
    if (pieces_.size() <= 1) return *this;
    std::vector<PiecePoly> out;
    out.reserve(pieces_.size());
    for (const auto& p : pieces_) {
        if (!out.empty() && p.width() < tol) {
            out.back().to = p.to; // absorb the sliver into its left neighbor
            continue;
        }
        if (out.empty() && p.width() < tol && pieces_.size() > 1) {
            // Leading sliver: shift the next piece's start back instead.
            continue;
        }
        out.push_back(p);
    }
    if (out.empty()) return *this;
    if (out.front().from != start()) {
        double delta = out.front().from - start();
        auto& f = out.front();
        for (auto& c : f.comp) c = c.compose_affine(-delta, 1.0);
        f.from = start();
    }
    return PiecewisePoly(dim_, std::move(out));
}

std::size_t PiecewisePoly::max_degree() const {
    int deg = 0;
    for (const auto& p : pieces_)
        for (const auto& c : p.comp) deg = std::max(deg, c.degree());
    return static_cast<std::size_t>(std::max(0, deg));
}

} // namespace retarda

#include "retarda/sampling.hpp"

#include "retarda/errors.hpp"
#include "retarda/rng.hpp"

namespace retarda {

PiecewiseHistory sample_history(std::size_t dim, double span, double r, std::size_t pieces,
                                std::uint64_t seed) {
    if (r < 0.0) throw DomainError("history radius must be nonnegative");
    if (pieces < 1) throw DomainError("at least one history piece required");
    Rng rng(seed);
    std::vector<PiecePoly> out;
    out.reserve(pieces);
    double width = span / static_cast<double>(pieces);
    for (std::size_t i = 0; i < pieces; ++i) {
        PiecePoly p;
        p.from = -span + static_cast<double>(i) * width;
        p.to = (i + 1 == pieces) ? 0.0 : -span + static_cast<double>(i + 1) * width;
        auto value = rng.uniform_in_ball(dim, r);
        p.comp.reserve(dim);
        for (double v : value) p.comp.push_back(Poly::constant(v));
        out.push_back(std::move(p));
    }
    return PiecewiseHistory(PiecewisePoly(dim, std::move(out)), rng.uniform_in_ball(dim, r));
}

ContinuousHistory sample_continuous_history(std::size_t dim, double span, double r,
                                            std::size_t knots, std::uint64_t seed) {
    if (knots < 2) throw DomainError("at least two knots required");
    Rng rng(seed);
    std::vector<double> breakpoints(knots);
    std::vector<std::vector<double>> values(knots);
    for (std::size_t i = 0; i < knots; ++i) {
        breakpoints[i] = -span + span * static_cast<double>(i) / static_cast<double>(knots - 1);
        values[i] = rng.uniform_in_ball(dim, r);
    }
    breakpoints.front() = -span;
    breakpoints.back() = 0.0;
    return ContinuousHistory::piecewise_linear(breakpoints, values);
}

PiecewiseHistory step_history(std::size_t dim, double span, double level) {
    std::vector<PiecePoly> pieces(2);
    pieces[0].from = -span;
    pieces[0].to = -span / 2.0;
    pieces[0].comp.assign(dim, Poly());
    pieces[1].from = -span / 2.0;
    pieces[1].to = 0.0;
    pieces[1].comp.assign(dim, Poly::constant(level));
    return PiecewiseHistory(PiecewisePoly(dim, std::move(pieces)),
                            std::vector<double>(dim, level));
}

} // namespace retarda

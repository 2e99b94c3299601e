#include "retarda/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "retarda/errors.hpp"
#include "retarda/io.hpp"
#include "retarda/parallel.hpp"
#include "retarda/rng.hpp"
#include "retarda/sampling.hpp"

namespace retarda {

namespace {

std::vector<double> uniform_times(double T, std::size_t points) {
    std::vector<double> times(points);
    for (std::size_t j = 0; j < points; ++j)
        times[j] = T * static_cast<double>(j) / static_cast<double>(points - 1);
    times.front() = 0.0;
    times.back() = T;
    return times;
}

double interp_nodes(const std::vector<double>& grid, const std::vector<double>& vals, double x) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x);
    if (it != grid.end() && *it == x) return vals[static_cast<std::size_t>(it - grid.begin())];
    if (x <= grid.front()) return vals.front();
    if (x >= grid.back()) return vals.back();
    std::size_t j = static_cast<std::size_t>(it - grid.begin()) - 1;
    double w = (x - grid[j]) / (grid[j + 1] - grid[j]);
    return vals[j] + w * (vals[j + 1] - vals[j]);
}

} // namespace

std::vector<double> geometric_grid(double r_min, double r_max, std::size_t points) {
    if (!(r_min > 0.0) || !(r_max > r_min)) throw DomainError("invalid geometric grid bounds");
    if (points < 2) throw DomainError("geometric grid needs at least two points");
    std::vector<double> grid(points);
    double ratio = std::log(r_max / r_min);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = r_min * std::exp(ratio * static_cast<double>(i) / static_cast<double>(points - 1));
    grid.front() = r_min;
    grid.back() = r_max;
    return grid;
}

// ---------------------------------------------------------------------------
// KappaFn

KappaFn KappaFn::from_expr_text(const std::string& text) {
    KappaFn k;
    ExprDims dims{0, 0, 0, true};
    k.expr_ = Expr::parse(text, dims);
    k.expr_text_ = text;
    return k;
}

KappaFn KappaFn::from_grid(std::vector<double> radii, std::vector<double> values) {
    if (radii.empty() || radii.size() != values.size())
        throw DomainError("kappa grid size mismatch");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1])))
            throw DomainError("kappa radius grid must be positive increasing");
        if (!(values[i] >= 0.0)) throw DomainError("kappa values must be nonnegative");
    }
    for (std::size_t i = 1; i < values.size(); ++i) values[i] = std::max(values[i], values[i - 1]);
    KappaFn k;
    k.radii_ = std::move(radii);
    k.values_ = std::move(values);
    return k;
}

double KappaFn::eval(double r) const {
    if (expr_) {
        EvalContext ctx{{}, {}, {}, r};
        double v = expr_->eval(ctx);
        if (!std::isfinite(v) || v < 0.0) throw EvalOverflow("kappa evaluated to an invalid value");
        return v;
    }
    if (r <= radii_.front()) return values_.front();
    if (r >= radii_.back()) {
        if (radii_.size() == 1) return values_.back();
        std::size_t q = radii_.size() - 1;
        double slope = (values_[q] - values_[q - 1]) / (radii_[q] - radii_[q - 1]);
        return values_[q] + slope * (r - radii_[q]);
    }
    return interp_nodes(radii_, values_, r);
}

Json KappaFn::to_json() const {
    if (expr_) return Json{{"type", "expr"}, {"expr", expr_text_}};
    return Json{{"type", "grid"}, {"radii", radii_}, {"values", values_}};
}

KappaFn KappaFn::from_json(const Json& j) {
    if (j.at("type") == "expr") return from_expr_text(j.at("expr").get<std::string>());
    return from_grid(j.at("radii").get<std::vector<double>>(),
                     j.at("values").get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// GrowthBound

GrowthBound::GrowthBound(std::vector<double> times, std::vector<double> radii,
                         std::vector<double> values)
    : times_(std::move(times)), radii_(std::move(radii)), values_(std::move(values)) {
    if (times_.empty() || radii_.empty() || values_.size() != times_.size() * radii_.size())
        throw DomainError("growth bound grid size mismatch");
    const std::size_t R = radii_.size();
    // Running max along both axes keeps the bound monotone regardless of the
    // raw data handed in.
    for (std::size_t ti = 0; ti < times_.size(); ++ti)
        for (std::size_t ri = 1; ri < R; ++ri)
            values_[ti * R + ri] = std::max(values_[ti * R + ri], values_[ti * R + ri - 1]);
    for (std::size_t ti = 1; ti < times_.size(); ++ti)
        for (std::size_t ri = 0; ri < R; ++ri)
            values_[ti * R + ri] = std::max(values_[ti * R + ri], values_[(ti - 1) * R + ri]);
}

double GrowthBound::eval(double t, double r) const {
    if (r <= 0.0) return 0.0;
    const std::size_t R = radii_.size();
    double tc = std::clamp(t, times_.front(), times_.back());

    auto column = [&](std::size_t ri) {
        // Interpolate the time axis at a fixed radius index.
        auto it = std::lower_bound(times_.begin(), times_.end(), tc);
        if (it != times_.end() && *it == tc)
            return values_[static_cast<std::size_t>(it - times_.begin()) * R + ri];
        std::size_t j = static_cast<std::size_t>(it - times_.begin()) - 1;
        double w = (tc - times_[j]) / (times_[j + 1] - times_[j]);
        double a = values_[j * R + ri];
        double b = values_[(j + 1) * R + ri];
        return a + w * (b - a);
    };

    auto at_radius = [&](double rr) {
        auto it = std::lower_bound(radii_.begin(), radii_.end(), rr);
        if (it != radii_.end() && *it == rr)
            return column(static_cast<std::size_t>(it - radii_.begin()));
        if (rr < radii_.front()) return column(0) * (rr / radii_.front());
        if (rr > radii_.back()) {
            if (R == 1) return column(0) * (rr / radii_.back());
            double a = column(R - 2);
            double b = column(R - 1);
            double slope = (b - a) / (radii_[R - 1] - radii_[R - 2]);
            return b + slope * (rr - radii_[R - 1]);
        }
        std::size_t j = static_cast<std::size_t>(it - radii_.begin()) - 1;
        double w = (rr - radii_[j]) / (radii_[j + 1] - radii_[j]);
        double a = column(j);
        double b = column(j + 1);
        return a + w * (b - a);
    };

    return at_radius(r);
}

Json GrowthBound::to_json() const {
    return Json{{"times", times_}, {"radii", radii_}, {"values", values_}};
}

GrowthBound GrowthBound::from_json(const Json& j) {
    return GrowthBound(j.at("times").get<std::vector<double>>(),
                       j.at("radii").get<std::vector<double>>(),
                       j.at("values").get<std::vector<double>>());
}

GrowthBound fit_mu(const ReachTable& table, double margin) {
    if (table.any_escape())
        throw DomainError("reach table carries escape flags; growth bound fitting rejected");
    const std::size_t R = table.radii.size();
    const std::size_t Tn = table.times.size();
    std::vector<double> values(Tn * R, 0.0);
    for (std::size_t ti = 0; ti < Tn; ++ti)
        for (std::size_t ri = 0; ri < R; ++ri)
            values[ti * R + ri] = margin * table.segment_at(ri, ti);
    return GrowthBound(table.times, table.radii, std::move(values));
}

// ---------------------------------------------------------------------------
// KLEnvelope

KLEnvelope KLEnvelope::scaled_exp(double coef, double rate) {
    if (!(coef >= 0.0) || !(rate > 0.0)) throw DomainError("invalid closed-form envelope");
    KLEnvelope e;
    e.form_ = ScaledExp{coef, rate};
    return e;
}

KLEnvelope KLEnvelope::grid(Grid g) {
    if (g.radii.empty() || g.times.empty() || g.values.size() != g.radii.size() * g.times.size())
        throw DomainError("envelope grid size mismatch");
    if (!(g.tail_rate > 0.0)) throw DomainError("envelope tail rate must be positive");
    KLEnvelope e;
    e.form_ = std::move(g);
    return e;
}

KLEnvelope KLEnvelope::uniform(Uniform u) {
    if (!u.inner || !u.mu) throw DomainError("uniform envelope needs inner envelope and bound");
    if (!(u.theta_p > 0.0)) throw DomainError("uniform envelope needs positive delay span");
    KLEnvelope e;
    e.form_ = std::move(u);
    return e;
}

/// Shifted inner envelope with exponential backfill on [-theta_p, 0).
double backfill_eval(const KLEnvelope& env, double r, double tau) {
    if (tau >= 0.0) return env.eval(r, tau);
    return env.eval(r, 0.0) * std::exp(-tau);
}

double KLEnvelope::eval(double r, double t) const {
    if (r <= 0.0) return 0.0;
    if (t < 0.0) throw DomainError("envelope evaluated at negative time");
    if (const auto* se = std::get_if<ScaledExp>(&form_))
        return se->coef * r * std::exp(-se->rate * t);
    if (const auto* g = std::get_if<Grid>(&form_)) {
        const std::size_t Tn = g->times.size();
        auto row_at = [&](std::size_t ri) {
            const double* row = g->values.data() + ri * Tn;
            if (t >= g->times.back())
                return row[Tn - 1] * std::exp(-g->tail_rate * (t - g->times.back()));
            auto it = std::lower_bound(g->times.begin(), g->times.end(), t);
            if (it != g->times.end() && *it == t)
                return row[static_cast<std::size_t>(it - g->times.begin())];
            if (t <= g->times.front()) return row[0];
            std::size_t j = static_cast<std::size_t>(it - g->times.begin()) - 1;
            double w = (t - g->times[j]) / (g->times[j + 1] - g->times[j]);
            return row[j] + w * (row[j + 1] - row[j]);
        };
        auto it = std::lower_bound(g->radii.begin(), g->radii.end(), r);
        if (it != g->radii.end() && *it == r)
            return row_at(static_cast<std::size_t>(it - g->radii.begin()));
        if (r < g->radii.front()) return row_at(0) * (r / g->radii.front());
        if (r > g->radii.back()) {
            if (g->radii.size() == 1) return row_at(0) * (r / g->radii.back());
            std::size_t q = g->radii.size() - 1;
            double a = row_at(q - 1);
            double b = row_at(q);
            double slope = (b - a) / (g->radii[q] - g->radii[q - 1]);
            return b + slope * (r - g->radii[q]);
        }
        std::size_t j = static_cast<std::size_t>(it - g->radii.begin()) - 1;
        double w = (r - g->radii[j]) / (g->radii[j + 1] - g->radii[j]);
        return row_at(j) + w * (row_at(j + 1) - row_at(j));
    }
    const auto& u = std::get<Uniform>(form_);
    double amplified = std::exp(u.theta_p * u.kappa.eval(u.mu->eval(u.theta_p, r))) * r;
    double first = std::exp(u.theta_p - t) * amplified;
    double second = backfill_eval(*u.inner, amplified, t - u.theta_p);
    return std::max(first, second);
}

const char* KLEnvelope::form() const {
    if (std::holds_alternative<ScaledExp>(form_)) return "scaled_exp";
    if (std::holds_alternative<Grid>(form_)) return "grid";
    return "uniform";
}

Json KLEnvelope::to_json() const {
    if (const auto* se = std::get_if<ScaledExp>(&form_))
        return Json{{"form", "scaled_exp"}, {"coef", se->coef}, {"rate", se->rate}};
    if (const auto* g = std::get_if<Grid>(&form_))
        return Json{{"form", "grid"},     {"radii", g->radii},
                    {"times", g->times},  {"values", g->values},
                    {"tail_rate", g->tail_rate}, {"margin", g->margin}};
    const auto& u = std::get<Uniform>(form_);
    return Json{{"form", "uniform"},
                {"theta_p", u.theta_p},
                {"kappa", u.kappa.to_json()},
                {"mu", u.mu->to_json()},
                {"inner", u.inner->to_json()}};
}

KLEnvelope KLEnvelope::from_json(const Json& j) {
    std::string form = j.at("form").get<std::string>();
    if (form == "scaled_exp")
        return scaled_exp(j.at("coef").get<double>(), j.at("rate").get<double>());
    if (form == "grid") {
        Grid g;
        g.radii = j.at("radii").get<std::vector<double>>();
        g.times = j.at("times").get<std::vector<double>>();
        g.values = j.at("values").get<std::vector<double>>();
        g.tail_rate = j.at("tail_rate").get<double>();
        g.margin = j.value("margin", 1.0);
        return grid(std::move(g));
    }
    if (form == "uniform") {
        Uniform u;
        u.theta_p = j.at("theta_p").get<double>();
        u.kappa = KappaFn::from_json(j.at("kappa"));
        u.mu = std::make_shared<GrowthBound>(GrowthBound::from_json(j.at("mu")));
        u.inner = std::make_shared<KLEnvelope>(from_json(j.at("inner")));
        return uniform(std::move(u));
    }
    throw ParseError("unknown envelope form '" + form + "'");
}

KLCheck validate_kl(const KLEnvelope& env, const std::vector<double>& r_probe,
                    const std::vector<double>& t_probe) {
    KLCheck chk;
    auto fail = [&](const std::string& msg, double r, double t) {
        chk.ok = false;
        chk.message = msg;
        chk.r = r;
        chk.t = t;
        return chk;
    };

    for (double t : t_probe)
        if (env.eval(0.0, t) != 0.0) return fail("nonzero value at r = 0", 0.0, t);

    constexpr double slack = 1e-12;
    for (double t : t_probe) {
        double prev = 0.0;
        for (double r : r_probe) {
            double v = env.eval(r, t);
            if (v < prev * (1.0 - slack) - slack)
                return fail("not nondecreasing in r", r, t);
            prev = std::max(prev, v);
        }
    }
    for (double r : r_probe) {
        double prev = std::numeric_limits<double>::infinity();
        for (double t : t_probe) {
            double v = env.eval(r, t);
            if (v > prev * (1.0 + slack) + slack)
                return fail("not nonincreasing in t", r, t);
            prev = std::min(prev, v);
        }
    }
    // Tail decay: far beyond the probe window the envelope must be far below
    // its initial level.
    double span = t_probe.back() - t_probe.front();
    for (double r : r_probe) {
        double head = env.eval(r, t_probe.front());
        if (head == 0.0) continue;
        double far = env.eval(r, t_probe.back() + 50.0 * std::max(span, 1.0));
        if (!(far <= head * 1e-6)) return fail("tail does not decay towards 0", r, t_probe.back());
    }
    return chk;
}

KLEnvelope envelope_from_samples(const std::vector<double>& radii,
                                 const std::vector<double>& times,
                                 const std::vector<double>& raw_values, double margin,
                                 double min_tail_rate) {
    const std::size_t R = radii.size();
    const std::size_t Tn = times.size();
    if (R == 0 || Tn < 2 || raw_values.size() != R * Tn)
        throw DomainError("envelope sample grid size mismatch");

    std::vector<double> v = raw_values;
    bool all_zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    if (all_zero) {
        KLEnvelope::Grid g;
        g.radii = radii;
        g.times = times;
        g.values = std::move(v);
        g.tail_rate = 1.0;
        g.margin = margin;
        return KLEnvelope::grid(std::move(g));
    }

    // Coercion order: monotone in r, then the nonincreasing hull in t, then
    // the margin, then the tail fit.
    for (std::size_t ri = 1; ri < R; ++ri)
        for (std::size_t ti = 0; ti < Tn; ++ti)
            v[ri * Tn + ti] = std::max(v[ri * Tn + ti], v[(ri - 1) * Tn + ti]);
    for (std::size_t ri = 0; ri < R; ++ri)
        for (std::size_t ti = Tn - 1; ti-- > 0;)
            v[ri * Tn + ti] = std::max(v[ri * Tn + ti], v[ri * Tn + ti + 1]);
    for (auto& x : v) x *= margin;

    // Exponential tail rate from the last decade of the time grid; the
    // slowest decay across radius rows wins.
    double t_from = times.back() / 10.0;
    double rate = std::numeric_limits<double>::infinity();
    bool fitted = false;
    for (std::size_t ri = 0; ri < R; ++ri) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t count = 0;
        for (std::size_t ti = 0; ti < Tn; ++ti) {
            if (times[ti] < t_from) continue;
            double val = v[ri * Tn + ti];
            if (!(val > 0.0)) continue;
            double x = times[ti];
            double y = std::log(val);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++count;
        }
        if (count < 2) continue; // row already at zero in the window
        double denom = static_cast<double>(count) * sxx - sx * sx;
        if (denom == 0.0) continue;
        double slope = (static_cast<double>(count) * sxy - sx * sy) / denom;
        rate = std::min(rate, -slope);
        fitted = true;
    }
    if (!fitted) rate = 1.0; // every row decayed to exact zero inside the window
    if (!(rate > min_tail_rate))
        throw EnvelopeRefusal("non-decaying sampled data (fitted tail rate " +
                              std::to_string(rate) + ")");

    KLEnvelope::Grid g;
    g.radii = radii;
    g.times = times;
    g.values = std::move(v);
    g.tail_rate = rate;
    g.margin = margin;
    return KLEnvelope::grid(std::move(g));
}

KLEnvelope fit_envelope(const SystemDef& sys, const std::vector<double>& radii, double horizon,
                        std::size_t samples, std::uint64_t seed, const EnvelopeFitOptions& opts) {
    if (!sys.zero_equilibrium())
        throw DomainError("envelope fitting requires a zero equilibrium (f(0,0,0) = 0)");
    if (radii.empty()) throw DomainError("radius grid must be nonempty");
    if (samples < 1) throw DomainError("at least one sample required");

    const std::vector<double> times = uniform_times(horizon, opts.time_points);
    const std::size_t R = radii.size();
    const std::size_t Tn = times.size();
    InputSignal u = sys.input_dim() == 0 ? empty_signal()
                                         : InputSignal::zero(sys.input_dim(), horizon);

    std::vector<std::vector<double>> rows(R * samples);
    std::vector<std::uint8_t> escape_flags(R * samples, 0);

    parallel_for(R * samples, [&](std::size_t job) {
        std::size_t ri = job / samples;
        std::size_t si = job % samples;
        std::uint64_t s = derive_seed(derive_seed(seed, ri), si);
        ContinuousHistory ch = sample_continuous_history(sys.state_dim(), sys.max_delay(),
                                                         radii[ri], opts.knots, s);
        PiecewiseHistory x0 = ch.embed();
        Trajectory traj = solve_tds(sys, x0, u, horizon, opts.solve);
        if (traj.escaped()) {
            escape_flags[job] = 1;
            return;
        }
        auto& row = rows[job];
        row.assign(Tn, 0.0);
        for (std::size_t ti = 0; ti < Tn; ++ti)
            row[ti] = segment_at(x0, traj, times[ti]).norm();
    });

    for (std::size_t job = 0; job < R * samples; ++job)
        if (escape_flags[job])
            throw EnvelopeRefusal("escape during envelope fitting at radius " +
                                  std::to_string(radii[job / samples]));

    std::vector<double> raw(R * Tn, 0.0);
    for (std::size_t ri = 0; ri < R; ++ri)
        for (std::size_t si = 0; si < samples; ++si)
            for (std::size_t ti = 0; ti < Tn; ++ti)
                raw[ri * Tn + ti] = std::max(raw[ri * Tn + ti], rows[ri * samples + si][ti]);

    return envelope_from_samples(radii, times, raw, opts.margin, opts.min_tail_rate);
}

double gronwall_bound(double r, const KappaFn& kappa, const GrowthBound& mu, double theta_p) {
    if (r < 0.0) throw DomainError("radius must be nonnegative");
    if (r == 0.0) return 0.0;
    return std::exp(theta_p * kappa.eval(mu.eval(theta_p, r))) * r;
}

KLEnvelope build_uniform_envelope(const KLEnvelope& beta, const KappaFn& kappa,
                                  const GrowthBound& mu, double theta_p) {
    KLEnvelope::Uniform u;
    u.inner = std::make_shared<KLEnvelope>(beta);
    u.kappa = kappa;
    u.mu = std::make_shared<GrowthBound>(mu);
    u.theta_p = theta_p;
    KLEnvelope env = KLEnvelope::uniform(std::move(u));

    std::vector<double> r_probe = mu.radii();
    r_probe.push_back(mu.radii().back() * 1.5);
    double t_span = std::max(mu.times().back(), 4.0 * theta_p);
    std::vector<double> t_probe = uniform_times(t_span, 33);
    KLCheck chk = validate_kl(env, r_probe, t_probe);
    if (!chk.ok)
        throw DomainError("uniform envelope failed shape validation at (r = " +
                          std::to_string(chk.r) + ", t = " + std::to_string(chk.t) +
                          "): " + chk.message);
    return env;
}

// ---------------------------------------------------------------------------
// Verification probes

std::string UgasReport::to_csv() const {
    std::ostringstream os;
    os << "sample,r,x0_norm,t,lhs,rhs,escaped\n";
    for (const auto& v : violations)
        os << v.sample << ',' << format_double(v.radius) << ',' << format_double(v.x0_norm) << ','
           << format_double(v.t) << ',' << format_double(v.lhs) << ',' << format_double(v.rhs)
           << ',' << int(v.escaped) << '\n';
    return os.str();
}

UgasReport check_ugas(const SystemDef& sys, const KLEnvelope& envelope,
                      const std::vector<double>& radii, double horizon, std::size_t samples,
                      std::uint64_t seed, const UgasCheckOptions& opts) {
    if (radii.empty()) throw DomainError("radius grid must be nonempty");
    if (samples < 1) throw DomainError("at least one sample required");

    const std::vector<double> times = uniform_times(horizon, opts.time_points);
    InputSignal u = sys.input_dim() == 0 ? empty_signal()
                                         : InputSignal::zero(sys.input_dim(), horizon);

    struct SampleOut {
        std::vector<UgasViolation> violations;
        std::size_t checks = 0;
        double min_margin = std::numeric_limits<double>::infinity();
    };
    std::vector<SampleOut> outs(samples);

    parallel_for(samples, [&](std::size_t si) {
        double r = radii[si % radii.size()];
        std::size_t pieces = 1 + si % opts.max_history_pieces;
        std::uint64_t s = derive_seed(seed, si);
        PiecewiseHistory x0 = sample_history(sys.state_dim(), sys.max_delay(), r, pieces, s);
        double x0_norm = x0.norm();

        SampleOut& out = outs[si];
        Trajectory traj = solve_tds(sys, x0, u, horizon, opts.solve);
        if (traj.escaped()) {
            const auto& esc = *traj.escape();
            out.violations.push_back(UgasViolation{si, r, x0_norm, esc.t_star, esc.last_norm,
                                                   envelope.eval(x0_norm, esc.t_star), true});
            return;
        }
        for (double t : times) {
            double lhs = segment_at(x0, traj, t).norm();
            double rhs = envelope.eval(x0_norm, t);
            ++out.checks;
            out.min_margin = std::min(out.min_margin, rhs - lhs);
            if (lhs > rhs)
                out.violations.push_back(UgasViolation{si, r, x0_norm, t, lhs, rhs, false});
        }
    });

    UgasReport report;
    report.samples = samples;
    for (auto& out : outs) {
        report.checks += out.checks;
        report.min_margin = std::min(report.min_margin, out.min_margin);
        for (auto& v : out.violations) report.violations.push_back(v);
    }
    return report;
}

bool LsGaReport::ls_ok() const {
    return std::all_of(ls.begin(), ls.end(), [](const LsProbeResult& r) { return r.ok; });
}

std::string LsGaReport::to_csv() const {
    std::ostringstream os;
    os << "kind,index,eps,x0_norm,safe_delta,time_to_contract,ok\n";
    for (std::size_t i = 0; i < ls.size(); ++i)
        os << "ls," << i << ',' << format_double(ls[i].eps) << ",,"
           << format_double(ls[i].safe_delta) << ",," << (ls[i].ok ? 1 : 0) << '\n';
    for (const auto& g : ga)
        os << "ga," << g.sample << ",," << format_double(g.x0_norm) << ",,"
           << (g.time_to_contract ? format_double(*g.time_to_contract) : std::string{}) << ','
           << (g.time_to_contract ? 1 : 0) << '\n';
    return os.str();
}

LsGaReport check_ls_ga(const SystemDef& sys, const std::vector<double>& eps_grid,
                       const std::vector<double>& radii, double horizon, std::size_t samples,
                       std::uint64_t seed, const LsGaOptions& opts) {
    if (!sys.zero_equilibrium())
        throw DomainError("stability probes require a zero equilibrium");
    const std::vector<double> times = uniform_times(horizon, opts.time_points);
    InputSignal u = sys.input_dim() == 0 ? empty_signal()
                                         : InputSignal::zero(sys.input_dim(), horizon);

    auto sup_segment_norm = [&](const PiecewiseHistory& x0, bool& escaped) {
        Trajectory traj = solve_tds(sys, x0, u, horizon, opts.solve);
        if (traj.escaped()) {
            escaped = true;
            return std::numeric_limits<double>::infinity();
        }
        double sup = 0.0;
        for (double t : times) sup = std::max(sup, segment_at(x0, traj, t).norm());
        return sup;
    };

    LsGaReport report;

    for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
        double eps = eps_grid[ei];
        LsProbeResult res;
        res.eps = eps;
        for (std::size_t j = 0; j < opts.delta_ladder && !res.ok; ++j) {
            double delta = eps / std::pow(1.1, static_cast<double>(j));
            std::vector<std::uint8_t> exceeded(samples, 0);
            parallel_for(samples, [&](std::size_t si) {
                std::uint64_t s = derive_seed(derive_seed(seed, ei * 1000 + j), si);
                std::size_t pieces = 1 + si % 6;
                PiecewiseHistory x0 =
                    sample_history(sys.state_dim(), sys.max_delay(), delta, pieces, s);
                bool escaped = false;
                double sup = sup_segment_norm(x0, escaped);
                if (escaped || sup > eps) exceeded[si] = 1;
            });
            if (std::none_of(exceeded.begin(), exceeded.end(),
                             [](std::uint8_t e) { return e != 0; })) {
                res.safe_delta = delta;
                res.ok = true;
            }
        }
        report.ls.push_back(res);
    }

    report.ga.resize(samples);
    parallel_for(samples, [&](std::size_t si) {
        double r = radii.empty() ? 1.0 : radii[si % radii.size()];
        std::uint64_t s = derive_seed(seed ^ 0x9a3f5e1dULL, si);
        std::size_t pieces = 1 + si % 6;
        PiecewiseHistory x0 = sample_history(sys.state_dim(), sys.max_delay(), r, pieces, s);
        double x0_norm = x0.norm();
        GaProbeResult g;
        g.sample = si;
        g.x0_norm = x0_norm;
        if (x0_norm == 0.0) {
            g.time_to_contract = 0.0;
        } else {
            Trajectory traj = solve_tds(sys, x0, u, horizon, opts.solve);
            if (!traj.escaped()) {
                for (double t : times) {
                    if (segment_at(x0, traj, t).norm() <= opts.contraction * x0_norm) {
                        g.time_to_contract = t;
                        break;
                    }
                }
            }
        }
        report.ga[si] = std::move(g);
    });
    for (const auto& g : report.ga)
        if (g.time_to_contract) ++report.ga_converged;

    return report;
}

PipelineResult run_gas_ugas_pipeline(const SystemDef& sys, const PipelineOptions& opts) {
    if (sys.input_dim() != 0)
        throw DomainError("the uniform-envelope pipeline analyzes input-free systems (m = 0)");
    if (!sys.zero_equilibrium())
        throw DomainError("the uniform-envelope pipeline requires a zero equilibrium");

    std::vector<double> radii = opts.radii;
    if (radii.empty()) radii = geometric_grid(0.3125, 5.0, 5);
    double theta_p = sys.max_delay();

    ReachConfig reach_cfg = opts.reach;
    reach_cfg.segment_norms = true;
    ReachTable table = estimate_reach(sys, radii, opts.horizon, opts.fit_samples,
                                      derive_seed(opts.seed, 1), reach_cfg);
    GrowthBound mu = fit_mu(table, opts.margin);

    KLEnvelope inner = fit_envelope(sys, radii, opts.horizon, opts.fit_samples,
                                    derive_seed(opts.seed, 2), opts.envelope);

    KappaFn kappa = [&] {
        if (sys.kappa()) return KappaFn::from_expr_text(sys.kappa()->print());
        // Sampled bound over the radii the envelope argument can reach.
        double rho_max = std::max(mu.eval(theta_p, radii.back()), radii.back()) * 1.5;
        std::vector<double> rho_grid = geometric_grid(rho_max / 256.0, rho_max, 9);
        std::vector<double> values(rho_grid.size());
        for (std::size_t i = 0; i < rho_grid.size(); ++i)
            values[i] = estimate_lipschitz(sys, rho_grid[i], opts.lipschitz_samples,
                                           derive_seed(opts.seed, 3));
        return KappaFn::from_grid(std::move(rho_grid), std::move(values));
    }();

    KLEnvelope uniform = build_uniform_envelope(inner, kappa, mu, theta_p);

    UgasReport report = check_ugas(sys, uniform, radii, opts.horizon, opts.check_samples,
                                   derive_seed(opts.seed, 4), opts.check);

    return PipelineResult{std::move(inner), std::move(uniform), std::move(mu), std::move(kappa),
                          std::move(report)};
}

} // namespace retarda

#include "retarda/reachability.hpp"

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

void check_radii(const std::vector<double>& radii) {
    if (radii.empty()) throw DomainError("radius grid must be nonempty");
    double prev = 0.0;
    for (double r : radii) {
        if (!(r > prev)) throw DomainError("radius grid must be positive and increasing");
        prev = r;
    }
}

} // namespace

bool ReachTable::any_escape() const {
    return std::any_of(escaped.begin(), escaped.end(), [](std::uint8_t e) { return e != 0; });
}

std::string ReachTable::to_csv() const {
    std::ostringstream os;
    os << "r,t,estimate,segment_norm,escaped\n";
    for (std::size_t ri = 0; ri < radii.size(); ++ri)
        for (std::size_t ti = 0; ti < times.size(); ++ti)
            os << format_double(radii[ri]) << ',' << format_double(times[ti]) << ','
               << format_double(point_at(ri, ti)) << ',' << format_double(segment_at(ri, ti))
               << ',' << int(escaped[ri]) << '\n';
    return os.str();
}

ReachTable estimate_reach(const SystemDef& sys, const std::vector<double>& radii, double T,
                          std::size_t samples, std::uint64_t seed, const ReachConfig& cfg) {
    check_radii(radii);
    if (!(T > 0.0)) throw DomainError("horizon must be positive");
    if (samples < 1) throw DomainError("at least one sample required");
    if (cfg.time_points < 2) throw DomainError("need at least two time grid points");

    ReachTable table;
    table.radii = radii;
    table.times = uniform_times(T, cfg.time_points);
    table.point_sup.assign(radii.size() * table.times.size(), 0.0);
    table.segment_sup.assign(radii.size() * table.times.size(), 0.0);
    table.escaped.assign(radii.size(), 0);
    table.samples = samples;
    table.seed = seed;
    table.horizon = T;

    const std::size_t nt = table.times.size();
    const std::size_t total = radii.size() * samples;

    struct Row {
        std::vector<double> point;
        std::vector<double> segment;
        bool escaped = false;
    };
    std::vector<Row> rows(total);

    parallel_for(total, [&](std::size_t job) {
        std::size_t ri = job / samples;
        std::size_t si = job % samples;
        double r = radii[ri];
        std::uint64_t radius_seed = derive_seed(seed, ri);
        std::uint64_t s_hist = derive_seed(radius_seed, 2 * si);
        std::uint64_t s_input = derive_seed(radius_seed, 2 * si + 1);

        PiecewiseHistory x0 =
            sample_history(sys.state_dim(), sys.max_delay(), r, cfg.history_pieces, s_hist);
        InputSignal u = sys.input_dim() == 0
                            ? empty_signal()
                            : sample_input(sys.input_dim(), r, T, cfg.input_pieces, s_input);

        Row& row = rows[job];
        row.point.assign(nt, 0.0);
        row.segment.assign(nt, 0.0);

        Trajectory traj = solve_tds(sys, x0, u, T, cfg.solve);
        row.escaped = traj.escaped();
        double reach_end = traj.t_end();

        double running = 0.0;
        double prev_t = 0.0;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            double t = std::min(table.times[ti], reach_end);
            if (t > prev_t) {
                running = std::max(running, traj.sup_norm(prev_t, t));
                prev_t = t;
            } else if (ti == 0) {
                std::vector<double> v0 = traj.value(0.0);
                double acc = 0.0;
                for (double x : v0) acc += x * x;
                running = std::max(running, std::sqrt(acc));
            }
            row.point[ti] = running;
            if (cfg.segment_norms && table.times[ti] <= reach_end && !row.escaped)
                row.segment[ti] = segment_at(x0, traj, table.times[ti]).norm();
        }
    });

    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        for (std::size_t si = 0; si < samples; ++si) {
            const Row& row = rows[ri * samples + si];
            if (row.escaped) table.escaped[ri] = 1;
            for (std::size_t ti = 0; ti < nt; ++ti) {
                auto idx = ri * nt + ti;
                table.point_sup[idx] = std::max(table.point_sup[idx], row.point[ti]);
                table.segment_sup[idx] = std::max(table.segment_sup[idx], row.segment[ti]);
            }
        }
    }

    // Balls nest, so estimates must not decrease with the radius.
    for (std::size_t ri = 1; ri < radii.size(); ++ri)
        for (std::size_t ti = 0; ti < nt; ++ti) {
            auto idx = ri * nt + ti;
            auto prev = (ri - 1) * nt + ti;
            table.point_sup[idx] = std::max(table.point_sup[idx], table.point_sup[prev]);
            table.segment_sup[idx] = std::max(table.segment_sup[idx], table.segment_sup[prev]);
        }

    return table;
}

ReachBound::ReachBound(std::vector<double> radii, std::vector<double> values, double horizon)
    : radii_(std::move(radii)), values_(std::move(values)), horizon_(horizon) {
    check_radii(radii_);
    if (values_.size() != radii_.size()) throw DomainError("bound value count mismatch");
    for (double v : values_)
        if (!(v >= 0.0)) throw DomainError("bound values must be nonnegative");
}

ReachBound ReachBound::from_table(const ReachTable& table) {
    std::vector<double> values(table.radii.size());
    for (std::size_t ri = 0; ri < table.radii.size(); ++ri)
        values[ri] = table.point_at(ri, table.times.size() - 1);
    return ReachBound(table.radii, std::move(values), table.horizon);
}

double ReachBound::eval(double r) const {
    if (r <= 0.0) return 0.0;
    // Exact node hits stay exact; interpolate otherwise.
    auto it = std::lower_bound(radii_.begin(), radii_.end(), r);
    if (it != radii_.end() && *it == r)
        return values_[static_cast<std::size_t>(it - radii_.begin())];
    if (r < radii_.front()) return values_.front() * (r / radii_.front());
    if (r > radii_.back()) {
        if (radii_.size() == 1) return values_.back() * (r / radii_.back());
        std::size_t q = radii_.size() - 1;
        double slope = (values_[q] - values_[q - 1]) / (radii_[q] - radii_[q - 1]);
        return values_[q] + slope * (r - radii_[q]);
    }
    std::size_t j = static_cast<std::size_t>(it - radii_.begin()) - 1;
    double w = (r - radii_[j]) / (radii_[j + 1] - radii_[j]);
    return values_[j] + w * (values_[j + 1] - values_[j]);
}

Json ReachBound::to_json() const {
    return Json{{"schema_version", 1},
                {"radii", radii_},
                {"values", values_},
                {"horizon", horizon_},
                {"extrapolated", extrapolated_}};
}

ReachBound ReachBound::from_json(const Json& j) {
    ReachBound b(j.at("radii").get<std::vector<double>>(),
                 j.at("values").get<std::vector<double>>(), j.at("horizon").get<double>());
    if (j.value("extrapolated", false)) b.mark_extrapolated();
    return b;
}

ReachBound extend_reach_bound(const ReachBound& r1, std::size_t n) {
    if (n < 1) throw DomainError("extension count must be at least 1");
    std::vector<double> current = r1.values();
    bool extrapolated = r1.extrapolated();
    double grid_max = r1.radii().back();

    for (std::size_t step = 1; step < n; ++step) {
        std::vector<double> next(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) {
            double r = r1.radii()[i];
            double rho = std::max(r, current[i]);
            if (rho > grid_max) extrapolated = true;
            next[i] = std::max(current[i], r1.eval(rho));
        }
        current = std::move(next);
    }

    ReachBound out(r1.radii(), std::move(current), r1.horizon() * static_cast<double>(n));
    if (extrapolated) out.mark_extrapolated();
    return out;
}

FcProbeReport fc_probe(const SystemDef& sys, double r_max, double T, std::size_t samples,
                       std::uint64_t seed, const ReachConfig& cfg) {
    if (!(r_max > 0.0)) throw DomainError("r_max must be positive");
    if (!(T > 0.0)) throw DomainError("horizon must be positive");
    if (samples < 1) throw DomainError("at least one sample required");

    // Geometric radius ladder up to r_max; escapes at small radii matter too.
    constexpr std::size_t kLevels = 8;
    FcProbeReport report;
    report.samples_run = samples;
    report.r_max = r_max;
    report.horizon = T;

    struct Slot {
        bool hit = false;
        double radius = 0.0;
        std::uint64_t sample_seed = 0;
        double t_star = 0.0;
        std::optional<PiecewiseHistory> x0;
        std::optional<InputSignal> u;
    };
    std::vector<Slot> slots(samples);

    parallel_for(samples, [&](std::size_t si) {
        double level_frac = std::pow(2.0, -static_cast<double>(kLevels - 1 - si % kLevels));
        double r = r_max * level_frac;
        std::uint64_t s_hist = derive_seed(seed, 2 * si);
        std::uint64_t s_input = derive_seed(seed, 2 * si + 1);

        PiecewiseHistory x0 =
            sample_history(sys.state_dim(), sys.max_delay(), r, cfg.history_pieces, s_hist);
        InputSignal u = sys.input_dim() == 0
                            ? empty_signal()
                            : sample_input(sys.input_dim(), r, T, cfg.input_pieces, s_input);

        Trajectory traj = solve_tds(sys, x0, u, T, cfg.solve);
        if (traj.escaped()) {
            Slot& slot = slots[si];
            slot.hit = true;
            slot.radius = r;
            slot.sample_seed = s_hist;
            slot.t_star = traj.escape()->t_star;
            slot.x0 = std::move(x0);
            slot.u = std::move(u);
        }
    });

    for (std::size_t si = 0; si < samples; ++si) {
        Slot& slot = slots[si];
        if (!slot.hit) continue;
        report.witnesses.push_back(EscapeWitness{slot.radius, si, slot.sample_seed, slot.t_star,
                                                 std::move(*slot.x0), std::move(*slot.u)});
    }
    return report;
}

} // namespace retarda

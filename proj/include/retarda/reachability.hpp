#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "retarda/signals.hpp"
#include "retarda/solver.hpp"
#include "retarda/system.hpp"

namespace retarda {

struct ReachConfig {
    std::size_t time_points = 65;   // grid on [0, T], including both ends
    std::size_t history_pieces = 4; // random piecewise-constant history pieces
    std::size_t input_pieces = 1;   // random input segments (constants by default)
    bool segment_norms = true;      // also record history-segment norms
    SolveConfig solve{};
};

/// Sampled estimates of sup |x(t)| over draws with history norm <= r and
/// input bound r. point_sup is a running max over time and samples; both
/// matrices are forced nondecreasing along the radius axis. Entries are
/// lower bounds on the true suprema by construction.
struct ReachTable {
    std::vector<double> radii; // ascending
    std::vector<double> times; // ascending, times.front() == 0, times.back() == T
    std::vector<double> point_sup;   // row-major [radius][time]
    std::vector<double> segment_sup; // row-major [radius][time]; norms of the state segment
    std::vector<std::uint8_t> escaped; // per radius
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double horizon = 0.0;

    double point_at(std::size_t ri, std::size_t ti) const {
        return point_sup[ri * times.size() + ti];
    }
    double segment_at(std::size_t ri, std::size_t ti) const {
        return segment_sup[ri * times.size() + ti];
    }
    bool any_escape() const;

    std::string to_csv() const;
};

ReachTable estimate_reach(const SystemDef& sys, const std::vector<double>& radii, double T,
                          std::size_t samples, std::uint64_t seed, const ReachConfig& cfg = {});

/// Piecewise-linear radius -> bound function over a radius grid, extended
/// below the grid by the chord through the origin and above it by the last
/// slope. Certifies a horizon.
class ReachBound {
public:
    ReachBound(std::vector<double> radii, std::vector<double> values, double horizon);

    static ReachBound from_table(const ReachTable& table);

    double eval(double r) const;
    const std::vector<double>& radii() const { return radii_; }
    const std::vector<double>& values() const { return values_; }
    double horizon() const { return horizon_; }
    bool extrapolated() const { return extrapolated_; }
    void mark_extrapolated() { extrapolated_ = true; }

    nlohmann::json to_json() const;
    static ReachBound from_json(const nlohmann::json& j);

private:
    std::vector<double> radii_;
    std::vector<double> values_;
    double horizon_;
    bool extrapolated_ = false;
};

/// Horizon extension by the max / re-entry recursion:
/// B_{k+1}(r) = max(B_k(r), R1(max(r, B_k(r)))), iterated n-1 times on the
/// grid. The result certifies horizon n*T and is flagged `extrapolated` when
/// any evaluation left the radius grid.
ReachBound extend_reach_bound(const ReachBound& r1, std::size_t n);

struct EscapeWitness {
    double radius = 0.0;
    std::size_t sample_index = 0;
    std::uint64_t sample_seed = 0;
    double t_star = 0.0;
    PiecewiseHistory x0;
    InputSignal u;
};

struct FcProbeReport {
    std::vector<EscapeWitness> witnesses;
    std::size_t samples_run = 0;
    double r_max = 0.0;
    double horizon = 0.0;

    bool empty() const { return witnesses.empty(); }
};

/// Hunt for finite escape over sampled data up to radius r_max. Witnesses are
/// first-class evidence; an empty report is only absence of counterexamples.
FcProbeReport fc_probe(const SystemDef& sys, double r_max, double T, std::size_t samples,
                       std::uint64_t seed, const ReachConfig& cfg = {});

} // namespace retarda

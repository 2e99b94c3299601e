#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "retarda/expr.hpp"
#include "retarda/reachability.hpp"
#include "retarda/system.hpp"

namespace retarda {

/// Nondecreasing radius -> Lipschitz-bound function: either an analytic
/// expression in r or a piecewise-linear grid (kept monotone by running max,
/// extended above the grid by the last slope, clamped below it).
class KappaFn {
public:
    static KappaFn from_expr_text(const std::string& text);
    static KappaFn from_grid(std::vector<double> radii, std::vector<double> values);

    double eval(double r) const;

    nlohmann::json to_json() const;
    static KappaFn from_json(const nlohmann::json& j);

private:
    KappaFn() = default;
    std::optional<Expr> expr_;
    std::string expr_text_;
    std::vector<double> radii_;
    std::vector<double> values_;
};

/// Two-argument bound mu(t, r), nondecreasing in each variable (enforced by
/// running max at construction). Bilinear on the grid; clamped beyond the
/// time grid, chord-through-origin below the radius grid, last-slope above.
class GrowthBound {
public:
    GrowthBound(std::vector<double> times, std::vector<double> radii,
                std::vector<double> values /* row-major [time][radius] */);

    double eval(double t, double r) const;
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& radii() const { return radii_; }
    const std::vector<double>& values() const { return values_; }

    nlohmann::json to_json() const;
    static GrowthBound from_json(const nlohmann::json& j);

private:
    std::vector<double> times_;
    std::vector<double> radii_;
    std::vector<double> values_;
};

/// mu-hat from a reach table's segment-norm estimates: running max over both
/// axes, inflated by the margin. Escape-flagged tables are rejected.
GrowthBound fit_mu(const ReachTable& table, double margin = 1.1);

/// Two-argument envelope beta(r, t): nondecreasing in r with beta(0, .) = 0,
/// nonincreasing in t with an exponentially decaying tail.
///
/// Three representations: a closed form coef * r * exp(-rate t); a fitted
/// grid with exponential tail extrapolation; and the two-branch uniform
/// construction max(e^{theta_p - t} A(r) r, shifted_inner(A(r) r, t - theta_p))
/// with A(r) = e^{theta_p kappa(mu(theta_p, r))} and the shifted inner
/// envelope backfilled by e^{-tau} on tau in [-theta_p, 0).
class KLEnvelope {
public:
    struct ScaledExp {
        double coef = 1.0;
        double rate = 1.0;
    };

    struct Grid {
        std::vector<double> radii;  // ascending, positive
        std::vector<double> times;  // ascending from 0
        std::vector<double> values; // row-major [radius][time]
        double tail_rate = 1.0;     // decay rate beyond the time grid
        double margin = 1.0;        // inflation applied during fitting
    };

    struct Uniform {
        std::shared_ptr<const KLEnvelope> inner;
        KappaFn kappa;
        std::shared_ptr<const GrowthBound> mu;
        double theta_p = 0.0;
    };

    static KLEnvelope scaled_exp(double coef, double rate);
    static KLEnvelope grid(Grid g);
    static KLEnvelope uniform(Uniform u);

    double eval(double r, double t) const;
    const char* form() const;
    const Grid* as_grid() const { return std::get_if<Grid>(&form_); }

    nlohmann::json to_json() const;
    static KLEnvelope from_json(const nlohmann::json& j);

private:
    std::variant<ScaledExp, Grid, Uniform> form_;
};

/// Envelope shape check on a probe grid: zero at r = 0, nondecreasing in r,
/// nonincreasing in t, and decay towards 0 past the horizon.
struct KLCheck {
    bool ok = true;
    std::string message;
    double r = 0.0;
    double t = 0.0;
};
KLCheck validate_kl(const KLEnvelope& env, const std::vector<double>& r_probe,
                    const std::vector<double>& t_probe);

struct EnvelopeFitOptions {
    std::size_t time_points = 65;
    std::size_t knots = 5;     // knots of the continuous piecewise-linear samples
    double margin = 1.1;
    double min_tail_rate = 1e-6; // below this the data counts as non-decaying
    SolveConfig solve{};
};

/// Deterministic coercion of raw per-(radius, time) maxima into an envelope:
/// running max along the radius axis, then the nonincreasing upper hull along
/// the time axis, margin inflation, and an exponential tail fitted on the
/// last decade of the time grid (the slowest rate across radius rows).
/// Throws EnvelopeRefusal("non-decaying ...") when the fitted rate is not
/// positive. All-zero data yields the zero envelope.
KLEnvelope envelope_from_samples(const std::vector<double>& radii,
                                 const std::vector<double>& times,
                                 const std::vector<double>& raw_values, double margin,
                                 double min_tail_rate);

/// Fit an envelope dominating sampled segment norms of continuous
/// piecewise-linear initial histories (no inputs). Requires a zero
/// equilibrium. Refuses non-decaying data.
KLEnvelope fit_envelope(const SystemDef& sys, const std::vector<double>& radii, double horizon,
                        std::size_t samples, std::uint64_t seed,
                        const EnvelopeFitOptions& opts = {});

/// exp(theta_p * kappa(mu(theta_p, r))) * r : the a-priori growth factor over
/// one delay span.
double gronwall_bound(double r, const KappaFn& kappa, const GrowthBound& mu, double theta_p);

/// Assemble the uniform envelope from the delay-interval growth bound and the
/// post-delay envelope, and validate its shape on a coarse probe grid.
KLEnvelope build_uniform_envelope(const KLEnvelope& beta, const KappaFn& kappa,
                                  const GrowthBound& mu, double theta_p);

struct UgasViolation {
    std::size_t sample = 0;
    double radius = 0.0;
    double x0_norm = 0.0;
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool escaped = false;
};

struct UgasReport {
    std::vector<UgasViolation> violations;
    std::size_t samples = 0;
    std::size_t checks = 0;
    double min_margin = std::numeric_limits<double>::infinity(); // min(rhs - lhs)
    std::string to_csv() const;
};

struct UgasCheckOptions {
    std::size_t time_points = 65;
    std::size_t max_history_pieces = 6;
    SolveConfig solve{};
};

/// Sample (generally discontinuous) histories with norm <= r across the
/// radius grid and assert segment-norm domination by the envelope on the
/// time grid. Escapes are reported as violations.
UgasReport check_ugas(const SystemDef& sys, const KLEnvelope& envelope,
                      const std::vector<double>& radii, double horizon, std::size_t samples,
                      std::uint64_t seed, const UgasCheckOptions& opts = {});

struct LsProbeResult {
    double eps = 0.0;
    double safe_delta = 0.0; // largest sampled-safe delta; 0 when none passed
    bool ok = false;
};

struct GaProbeResult {
    std::size_t sample = 0;
    double x0_norm = 0.0;
    std::optional<double> time_to_contract; // first grid time with norm <= 1% of start
};

struct LsGaReport {
    std::vector<LsProbeResult> ls;
    std::vector<GaProbeResult> ga;
    std::size_t ga_converged = 0;
    bool ls_ok() const;
    std::string to_csv() const;
};

struct LsGaOptions {
    std::size_t time_points = 65;
    std::size_t delta_ladder = 13; // candidates eps / 1.1^j, j = 0 .. ladder-1
    double contraction = 0.01;
    SolveConfig solve{};
};

LsGaReport check_ls_ga(const SystemDef& sys, const std::vector<double>& eps_grid,
                       const std::vector<double>& radii, double horizon, std::size_t samples,
                       std::uint64_t seed, const LsGaOptions& opts = {});

struct PipelineOptions {
    std::vector<double> radii; // fit radius grid
    double horizon = 50.0;
    std::size_t fit_samples = 200;
    std::size_t check_samples = 1000;
    std::size_t lipschitz_samples = 256;
    std::uint64_t seed = 1;
    double margin = 1.1;
    ReachConfig reach{};
    EnvelopeFitOptions envelope{};
    UgasCheckOptions check{};
};

struct PipelineResult {
    KLEnvelope inner;
    KLEnvelope uniform;
    GrowthBound mu;
    KappaFn kappa;
    UgasReport report;
};

/// Full construction-and-check chain: reach estimates -> mu-hat -> inner
/// envelope on continuous data -> kappa -> uniform envelope -> held-out check
/// on discontinuous data (fresh derived seed). Requires an input-free system
/// with a zero equilibrium; refuses (EnvelopeRefusal) on non-decaying data.
PipelineResult run_gas_ugas_pipeline(const SystemDef& sys, const PipelineOptions& opts);

/// Geometric grid helper (default density: 8 points per decade).
std::vector<double> geometric_grid(double r_min, double r_max, std::size_t points);

} // namespace retarda

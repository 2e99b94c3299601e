#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retarda/expr.hpp"
#include "retarda/history.hpp"

namespace retarda {

/// A delay system: dimensions, delays theta_1 < ... < theta_p, the right-hand
/// side f(x, delayed values, u) as one expression per state component, and an
/// optional analytic Lipschitz-bound expression kappa(r).
///
/// Immutable after parsing; evaluation is reentrant.
class SystemDef {
public:
    SystemDef(std::string name, std::string description, std::size_t n, std::size_t m,
              Delays delays, std::vector<Expr> rhs, std::optional<Expr> kappa);

    const std::string& name() const { return name_; }
    const std::string& description() const { return description_; }
    std::size_t state_dim() const { return n_; }
    std::size_t input_dim() const { return m_; }
    std::size_t delay_count() const { return delays_.count(); }
    const Delays& delays() const { return delays_; }
    double max_delay() const { return delays_.max_delay(); }
    const std::vector<Expr>& rhs() const { return rhs_; }
    const std::optional<Expr>& kappa() const { return kappa_; }

    /// True when f(0, 0, 0) evaluates to exactly zero; checked at construction.
    bool zero_equilibrium() const { return zero_equilibrium_; }

    /// Pointwise evaluation of f. xd holds p blocks of n delayed components.
    void eval_rhs(std::span<const double> x, std::span<const double> xd,
                  std::span<const double> u, std::span<double> out) const;
    std::vector<double> eval_rhs(std::span<const double> x, std::span<const double> xd,
                                 std::span<const double> u) const;

    /// Evaluate the analytic bound kappa at radius r (requires kappa present).
    double eval_kappa(double r) const;

    /// Optional default initial history carried by the spec document.
    const std::optional<PiecewiseHistory>& default_history() const { return default_history_; }
    void set_default_history(PiecewiseHistory h) { default_history_ = std::move(h); }

private:
    std::string name_;
    std::string description_;
    std::size_t n_;
    std::size_t m_;
    Delays delays_;
    std::vector<Expr> rhs_;
    std::optional<Expr> kappa_;
    bool zero_equilibrium_ = false;
    std::optional<PiecewiseHistory> default_history_;
};

/// Parse a system-spec JSON document (fields: name, description, n, m,
/// delays, f, kappa, default_history). Fully validated; delay duplicates,
/// bad indices, and dimension mismatches are rejected with positions where
/// the expression parser has them.
SystemDef parse_system(const std::string& json_text);

/// Serialize back to the system-spec JSON document format.
std::string print_system(const SystemDef& sys);

struct LipschitzConfig {
    double safety = 1.25;   // inflation on the sampled estimate
    int scale_levels = 64;  // dyadic down-scales, bounded below by scale_floor
    double scale_floor = 1e-9;
};

/// Sampled upper estimate of the Lipschitz constant of f over the closed
/// joint (state, delayed-state) ball of radius r, with u = 0.
///
/// Difference quotients are taken for a canonical set of random pairs and
/// axis probes, re-scaled along a dyadic ladder of radii so that estimates at
/// radius r and 2r share every common scale; the running max is therefore
/// nondecreasing across dyadic radius ladders. The result is inflated by the
/// safety factor, and an analytic kappa, when present, is a lower clamp.
double estimate_lipschitz(const SystemDef& sys, double r, std::size_t samples,
                          std::uint64_t seed, const LipschitzConfig& cfg = {});

} // namespace retarda

#include "retarda/system.hpp"

#include <algorithm>
#include <cmath>

#include "retarda/errors.hpp"
#include "retarda/io.hpp"
#include "retarda/rng.hpp"

namespace retarda {

SystemDef::SystemDef(std::string name, std::string description, std::size_t n, std::size_t m,
                     Delays delays, std::vector<Expr> rhs, std::optional<Expr> kappa)
    : name_(std::move(name)),
      description_(std::move(description)),
      n_(n),
      m_(m),
      delays_(std::move(delays)),
      rhs_(std::move(rhs)),
      kappa_(std::move(kappa)) {
    if (n_ == 0) throw DomainError("state dimension must be positive");
    if (rhs_.size() != n_) throw DomainError("rhs component count must equal the state dimension");

    std::vector<double> zx(n_, 0.0), zxd(n_ * delays_.count(), 0.0), zu(m_, 0.0), out(n_);
    try {
        eval_rhs(zx, zxd, zu, out);
        zero_equilibrium_ = std::all_of(out.begin(), out.end(), [](double v) { return v == 0.0; });
    } catch (const EvalOverflow&) {
        zero_equilibrium_ = false;
    }
}

void SystemDef::eval_rhs(std::span<const double> x, std::span<const double> xd,
                         std::span<const double> u, std::span<double> out) const {
    if (x.size() != n_ || xd.size() != n_ * delays_.count() || u.size() != m_)
        throw DomainError("rhs argument dimension mismatch");
    EvalContext ctx{x, xd, u, 0.0};
    for (std::size_t i = 0; i < n_; ++i) {
        double v = rhs_[i].eval(ctx);
        if (!std::isfinite(v)) throw EvalOverflow("rhs component " + std::to_string(i + 1) +
                                                  " evaluated to a non-finite value");
        out[i] = v;
    }
}

std::vector<double> SystemDef::eval_rhs(std::span<const double> x, std::span<const double> xd,
                                        std::span<const double> u) const {
    std::vector<double> out(n_);
    eval_rhs(x, xd, u, out);
    return out;
}

double SystemDef::eval_kappa(double r) const {
    if (!kappa_) throw DomainError("system has no analytic Lipschitz bound");
    EvalContext ctx{{}, {}, {}, r};
    double v = kappa_->eval(ctx);
    if (!std::isfinite(v) || v < 0.0) throw EvalOverflow("kappa evaluated to an invalid value");
    return v;
}

SystemDef parse_system(const std::string& json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
    }

    auto require = [&](const char* key) -> const Json& {
        if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
        return j.at(key);
    };

    std::size_t n = require("n").get<std::size_t>();
    std::size_t m = j.value("m", std::size_t{0});
    if (n == 0) throw ParseError("n must be positive");

    auto delay_values = require("delays").get<std::vector<double>>();
    for (double d : delay_values)
        if (!(d > 0.0)) throw ParseError("nonpositive delay");
    for (std::size_t i = 0; i + 1 < delay_values.size(); ++i)
        for (std::size_t k = i + 1; k < delay_values.size(); ++k)
            if (delay_values[i] == delay_values[k]) throw ParseError("duplicate delay");
    std::sort(delay_values.begin(), delay_values.end());
    Delays delays(delay_values);

    const auto& f = require("f");
    if (!f.is_array() || f.size() != n)
        throw ParseError("f must list exactly n expressions");
    ExprDims dims{n, delays.count(), m, false};
    std::vector<Expr> rhs;
    rhs.reserve(n);
    for (const auto& fi : f) rhs.push_back(Expr::parse(fi.get<std::string>(), dims));

    std::optional<Expr> kappa;
    if (j.contains("kappa") && !j.at("kappa").is_null()) {
        ExprDims kdims{0, 0, 0, true};
        kappa = Expr::parse(j.at("kappa").get<std::string>(), kdims);
    }

    SystemDef sys(j.value("name", std::string{}), j.value("description", std::string{}), n, m,
                  std::move(delays), std::move(rhs), std::move(kappa));

    if (j.contains("default_history") && !j.at("default_history").is_null()) {
        PiecewiseHistory h = history_from_json(j.at("default_history"));
        if (h.dim() != n || h.span() != sys.max_delay())
            throw ParseError("default_history must have dim n and span theta_p");
        sys.set_default_history(std::move(h));
    }
    return sys;
}

std::string print_system(const SystemDef& sys) {
    Json j;
    j["name"] = sys.name();
    j["description"] = sys.description();
    j["n"] = sys.state_dim();
    j["m"] = sys.input_dim();
    j["delays"] = sys.delays().values();
    Json f = Json::array();
    for (const auto& e : sys.rhs()) f.push_back(e.print());
    j["f"] = std::move(f);
    if (sys.kappa()) j["kappa"] = sys.kappa()->print();
    if (sys.default_history()) j["default_history"] = history_to_json(*sys.default_history());
    return j.dump(2);
}

double estimate_lipschitz(const SystemDef& sys, double r, std::size_t samples,
                          std::uint64_t seed, const LipschitzConfig& cfg) {
    if (!(r > 0.0)) throw DomainError("radius must be positive");
    if (samples < 2) throw DomainError("at least two samples required");

    const std::size_t n = sys.state_dim();
    const std::size_t joint = n * (1 + sys.delay_count());
    const std::vector<double> u(sys.input_dim(), 0.0);

    auto apply = [&](std::span<const double> joint_arg, std::span<double> out) {
        sys.eval_rhs(joint_arg.subspan(0, n), joint_arg.subspan(n), u, out);
    };

    // Canonical unit-ball pairs, reused at every scale level.
    Rng rng(seed);
    std::vector<std::vector<double>> points;
    points.reserve(2 * samples);
    for (std::size_t i = 0; i < 2 * samples; ++i) points.push_back(rng.uniform_in_ball(joint, 1.0));

    std::vector<double> fa(n), fb(n), pa(joint), pb(joint);
    auto quotient = [&](std::span<const double> a, std::span<const double> b) {
        double dist2 = 0.0;
        for (std::size_t d = 0; d < joint; ++d) {
            double diff = a[d] - b[d];
            dist2 += diff * diff;
        }
        if (dist2 == 0.0) return 0.0;
        apply(a, fa);
        apply(b, fb);
        double num2 = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            double diff = fa[d] - fb[d];
            num2 += diff * diff;
        }
        return std::sqrt(num2 / dist2);
    };

    double best = 0.0;
    double scale = r;
    for (int level = 0; level < cfg.scale_levels && scale >= cfg.scale_floor; ++level, scale *= 0.5) {
        // Random pairs.
        for (std::size_t i = 0; i + 1 < 2 * samples; i += 2) {
            for (std::size_t d = 0; d < joint; ++d) {
                pa[d] = scale * points[i][d];
                pb[d] = scale * points[i + 1][d];
            }
            best = std::max(best, quotient(pa, pb));
        }
        // Axis probes: boundary slope and through-origin secant per direction.
        for (std::size_t d = 0; d < joint; ++d) {
            std::fill(pa.begin(), pa.end(), 0.0);
            std::fill(pb.begin(), pb.end(), 0.0);
            pa[d] = scale;
            pb[d] = scale * (1.0 - 1e-4);
            best = std::max(best, quotient(pa, pb));
            pa[d] = -scale;
            pb[d] = -scale * (1.0 - 1e-4);
            best = std::max(best, quotient(pa, pb));
            pa[d] = scale;
            pb[d] = -scale;
            best = std::max(best, quotient(pa, pb));
        }
    }

    double inflated = cfg.safety * best;
    if (sys.kappa()) return std::max(sys.eval_kappa(r), inflated);
    return inflated;
}

} // namespace retarda

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "retarda/catalog.hpp"
#include "retarda/errors.hpp"
#include "retarda/io.hpp"
#include "retarda/reachability.hpp"
#include "retarda/sampling.hpp"
#include "retarda/signals.hpp"
#include "retarda/solver.hpp"
#include "retarda/stability.hpp"
#include "retarda/system.hpp"

namespace fs = std::filesystem;
using namespace retarda;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct SystemSource {
    std::string catalog;
    std::string path;

    SystemDef load() const {
        if (!catalog.empty() && !path.empty())
            throw DomainError("give either --catalog or --system, not both");
        if (!catalog.empty()) return load_catalog(catalog);
        if (!path.empty()) return parse_system(read_file(path));
        throw DomainError("a system is required (--catalog NAME or --system PATH)");
    }

    Json describe() const {
        Json j;
        if (!catalog.empty()) j["catalog"] = catalog;
        if (!path.empty()) j["system"] = path;
        return j;
    }
};

void add_system_flags(CLI::App* cmd, SystemSource& src) {
    cmd->add_option("--catalog", src.catalog, "built-in system name");
    cmd->add_option("--system", src.path, "path to a system-spec JSON document");
}

PiecewiseHistory resolve_history(const SystemDef& sys, const std::string& x0_path) {
    if (!x0_path.empty()) {
        PiecewiseHistory h = history_from_json(Json::parse(read_file(x0_path)));
        if (h.dim() != sys.state_dim() || h.span() != sys.max_delay())
            throw DomainError("history literal does not match the system (dim or span)");
        return h;
    }
    if (sys.default_history()) return *sys.default_history();
    throw DomainError("system has no default history; pass --x0 FILE");
}

InputSignal resolve_input(const SystemDef& sys, const std::string& input_path, double horizon) {
    if (sys.input_dim() == 0) {
        if (!input_path.empty()) throw DomainError("system has no inputs but --input was given");
        return empty_signal();
    }
    if (input_path.empty()) return InputSignal::zero(sys.input_dim(), horizon);
    InputSignal u = signal_from_json(Json::parse(read_file(input_path)));
    if (u.dim() != sys.input_dim()) throw DomainError("input literal dimension mismatch");
    return u;
}

std::string trajectory_csv(const Trajectory& traj, std::size_t grid_points) {
    // Rows: uniform grid union breakpoint times, flag = 1 on breakpoints.
    std::vector<std::pair<double, int>> rows;
    for (std::size_t j = 0; j < grid_points; ++j) {
        double t = traj.t_end() * static_cast<double>(j) / static_cast<double>(grid_points - 1);
        rows.emplace_back(std::min(t, traj.t_end()), 0);
    }
    for (double b : traj.breakpoints())
        if (b <= traj.t_end()) rows.emplace_back(b, 1);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end(),
                           [](auto& a, auto& b) { return a.first == b.first && a.second == b.second; }),
               rows.end());
    // A grid row duplicating a breakpoint time keeps the flag.
    std::vector<std::pair<double, int>> dedup;
    for (const auto& row : rows) {
        if (!dedup.empty() && dedup.back().first == row.first)
            dedup.back().second |= row.second;
        else
            dedup.push_back(row);
    }

    std::ostringstream os;
    os << "t";
    for (std::size_t i = 1; i <= traj.dim(); ++i) os << ",x_" << i;
    os << ",breakpoint\n";
    std::vector<double> buf(traj.dim());
    for (const auto& [t, flag] : dedup) {
        traj.value_into(t, buf);
        os << format_double(t);
        for (double v : buf) os << ',' << format_double(v);
        os << ',' << flag << '\n';
    }
    return os.str();
}

Json escape_json(const Trajectory& traj) {
    if (!traj.escaped()) return nullptr;
    const auto& esc = *traj.escape();
    return Json{{"t_star", esc.t_star},
                {"last_norm", esc.last_norm},
                {"min_step", esc.min_step},
                {"rhs_overflow", esc.rhs_overflow},
                {"reason", esc.reason}};
}

Json solve_meta(const Trajectory& traj, const SolveConfig& cfg) {
    return Json{{"schema_version", 1},
                {"t_end", traj.t_end()},
                {"steps_accepted", traj.steps_accepted()},
                {"steps_rejected", traj.steps_rejected()},
                {"breakpoints", traj.breakpoints()},
                {"escape", escape_json(traj)},
                {"rel_tol", cfg.rel_tol},
                {"abs_tol", cfg.abs_tol}};
}

void emit_summary(const std::string& command, int exit_code, const Json& config,
                  const Json& result, const Json& outputs) {
    Json summary{{"command", command},
                 {"ok", exit_code == kExitOk},
                 {"exit", exit_code},
                 {"config", config},
                 {"result", result},
                 {"outputs", outputs}};
    std::cout << summary.dump() << std::endl;
}

std::vector<double> parse_list(const std::string& spec, double fallback_single) {
    if (spec.empty()) {
        if (fallback_single > 0.0) return {fallback_single};
        throw DomainError("a comma-separated list is required");
    }
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw DomainError("empty radius list");
    return out;
}

double sup_deviation(const Trajectory& a, const Trajectory& b, std::size_t points) {
    double t_max = std::min(a.t_end(), b.t_end());
    double sup = 0.0;
    std::vector<double> va(a.dim()), vb(b.dim());
    for (std::size_t j = 0; j <= points; ++j) {
        double t = t_max * static_cast<double>(j) / static_cast<double>(points);
        a.value_into(t, va);
        b.value_into(t, vb);
        double acc = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) acc += (va[i] - vb[i]) * (va[i] - vb[i]);
        sup = std::max(sup, std::sqrt(acc));
    }
    return sup;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"retarda: simulation and verification toolkit for systems with discrete delays"};
    app.require_subcommand(1);

    // --- simulate ---------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "integrate a delay system and dump the trajectory");
    SystemSource sim_src;
    add_system_flags(sim, sim_src);
    double sim_T = 0.0;
    std::string sim_x0, sim_input, sim_out = ".";
    SolveConfig sim_cfg;
    std::size_t sim_points = 201;
    bool sim_allow_escape = false;
    sim->add_option("--t-final", sim_T, "integration horizon")->required();
    sim->add_option("--x0", sim_x0, "history literal JSON file (default: catalog default)");
    sim->add_option("--input", sim_input, "input signal literal JSON file (default: zero)");
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--rel-tol", sim_cfg.rel_tol, "relative tolerance");
    sim->add_option("--abs-tol", sim_cfg.abs_tol, "absolute tolerance");
    sim->add_option("--csv-points", sim_points, "uniform grid rows in the CSV");
    sim->add_flag("--allow-escape", sim_allow_escape, "exit 0 even when the solution escapes");

    // --- reduce -----------------------------------------------------------
    auto* red = app.add_subcommand(
        "reduce", "solve the delay system, extract the delayed-state signal, and re-solve the "
                  "input-driven form");
    SystemSource red_src;
    add_system_flags(red, red_src);
    double red_T = 0.0;
    std::string red_x0, red_input, red_out = ".";
    SolveConfig red_cfg;
    red->add_option("--t-final", red_T, "horizon")->required();
    red->add_option("--x0", red_x0, "history literal JSON file");
    red->add_option("--input", red_input, "input signal literal JSON file");
    red->add_option("--out", red_out, "output directory");
    red->add_option("--rel-tol", red_cfg.rel_tol, "relative tolerance");
    red->add_option("--abs-tol", red_cfg.abs_tol, "absolute tolerance");

    // --- lift -------------------------------------------------------------
    auto* lift = app.add_subcommand(
        "lift", "build the initial history replaying a delayed-state signal near t = 0");
    SystemSource lift_src;
    add_system_flags(lift, lift_src);
    std::string lift_z0, lift_v, lift_out = ".";
    double lift_delta = 0.0;
    lift->add_option("--z0", lift_z0, "initial state, comma separated")->required();
    lift->add_option("--v", lift_v, "delayed-state signal literal JSON file")->required();
    lift->add_option("--delta", lift_delta, "window length")->required();
    lift->add_option("--out", lift_out, "output directory");

    // --- reach ------------------------------------------------------------
    auto* reach = app.add_subcommand("reach", "sampled reachability estimates over a radius grid");
    SystemSource reach_src;
    add_system_flags(reach, reach_src);
    double reach_T = 0.0, reach_radius = 0.0;
    std::string reach_radii, reach_out = ".";
    std::size_t reach_samples = 100, reach_extend = 1;
    std::uint64_t reach_seed = 0;
    bool reach_seed_set = false;
    ReachConfig reach_cfg;
    reach->add_option("--t-final", reach_T, "horizon")->required();
    reach->add_option("--radius", reach_radius, "single radius");
    reach->add_option("--radii", reach_radii, "comma-separated radius grid");
    reach->add_option("--samples", reach_samples, "samples per radius");
    reach->add_option("--seed", reach_seed, "rng seed")->each([&](const std::string&) {
        reach_seed_set = true;
    });
    reach->add_option("--extend", reach_extend, "extend the bound to N times the horizon");
    reach->add_option("--input-pieces", reach_cfg.input_pieces, "random input segments");
    reach->add_option("--history-pieces", reach_cfg.history_pieces, "random history pieces");
    reach->add_option("--time-points", reach_cfg.time_points, "time grid points");
    reach->add_option("--out", reach_out, "output directory");

    // --- fc-probe ---------------------------------------------------------
    auto* fcp = app.add_subcommand("fc-probe", "hunt for finite escape over sampled data");
    SystemSource fcp_src;
    add_system_flags(fcp, fcp_src);
    double fcp_rmax = 0.0, fcp_T = 0.0;
    std::size_t fcp_samples = 64;
    std::uint64_t fcp_seed = 0;
    bool fcp_seed_set = false;
    std::string fcp_out = ".";
    fcp->add_option("--r-max", fcp_rmax, "largest sampling radius")->required();
    fcp->add_option("--t-final", fcp_T, "horizon")->required();
    fcp->add_option("--samples", fcp_samples, "sample count");
    fcp->add_option("--seed", fcp_seed, "rng seed")->each([&](const std::string&) {
        fcp_seed_set = true;
    });
    fcp->add_option("--out", fcp_out, "output directory");

    // --- stability --------------------------------------------------------
    auto* stab = app.add_subcommand("stability", "local-stability and attractivity probes");
    SystemSource stab_src;
    add_system_flags(stab, stab_src);
    std::string stab_eps = "0.5,1,2", stab_radii = "0.5,1,2,5", stab_out = ".";
    double stab_T = 20.0;
    std::size_t stab_samples = 40;
    std::uint64_t stab_seed = 0;
    bool stab_seed_set = false;
    stab->add_option("--eps", stab_eps, "comma-separated epsilon grid");
    stab->add_option("--radii", stab_radii, "comma-separated radius grid");
    stab->add_option("--horizon", stab_T, "probe horizon");
    stab->add_option("--samples", stab_samples, "samples per probe");
    stab->add_option("--seed", stab_seed, "rng seed")->each([&](const std::string&) {
        stab_seed_set = true;
    });
    stab->add_option("--out", stab_out, "output directory");

    // --- verify -----------------------------------------------------------
    auto* ver = app.add_subcommand(
        "verify", "fit the uniform decay envelope and check it on held-out data");
    SystemSource ver_src;
    add_system_flags(ver, ver_src);
    std::string ver_radii, ver_out = ".";
    PipelineOptions ver_opts;
    bool ver_seed_set = false;
    ver->add_option("--radii", ver_radii, "comma-separated fit radius grid");
    ver->add_option("--horizon", ver_opts.horizon, "fit/check horizon");
    ver->add_option("--fit-samples", ver_opts.fit_samples, "samples per radius for fitting");
    ver->add_option("--check-samples", ver_opts.check_samples, "held-out samples");
    ver->add_option("--seed", ver_opts.seed, "rng seed")->each([&](const std::string&) {
        ver_seed_set = true;
    });
    ver->add_option("--out", ver_out, "output directory");

    // --- catalog ----------------------------------------------------------
    auto* cat = app.add_subcommand("catalog", "list built-in systems");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*sim) {
            SystemDef sys = sim_src.load();
            PiecewiseHistory x0 = resolve_history(sys, sim_x0);
            InputSignal u = resolve_input(sys, sim_input, sim_T);
            Trajectory traj = solve_tds(sys, x0, u, sim_T, sim_cfg);

            fs::path dir(sim_out);
            atomic_write_file(dir / "trajectory.csv", trajectory_csv(traj, sim_points));
            atomic_write_file(dir / "simulate_meta.json", solve_meta(traj, sim_cfg).dump(2) + "\n");

            int code = (traj.escaped() && !sim_allow_escape) ? kExitNumeric : kExitOk;
            Json config = sim_src.describe();
            config["t_final"] = sim_T;
            config["rel_tol"] = sim_cfg.rel_tol;
            config["abs_tol"] = sim_cfg.abs_tol;
            Json result{{"t_end", traj.t_end()}, {"escape", escape_json(traj)}};
            if (!traj.escaped()) result["x_final"] = traj.final_value();
            emit_summary("simulate", code, config,
                         result,
                         Json{{"trajectory", (dir / "trajectory.csv").string()},
                              {"meta", (dir / "simulate_meta.json").string()}});
            return code;
        }

        if (*red) {
            SystemDef sys = red_src.load();
            PiecewiseHistory x0 = resolve_history(sys, red_x0);
            InputSignal u = resolve_input(sys, red_input, red_T);
            Trajectory tds = solve_tds(sys, x0, u, red_T, red_cfg);
            if (tds.escaped()) {
                emit_summary("reduce", kExitNumeric, red_src.describe(),
                             Json{{"escape", escape_json(tds)}}, Json::object());
                return kExitNumeric;
            }
            InputSignal v = delayed_input_signal(x0, tds, sys.delays());
            Trajectory ode = solve_ode(sys, x0.point_value(), v, u, tds.t_end(), red_cfg);
            double dev = sup_deviation(tds, ode, 512);

            fs::path dir(red_out);
            atomic_write_file(dir / "tds.csv", trajectory_csv(tds, 201));
            atomic_write_file(dir / "ode.csv", trajectory_csv(ode, 201));
            atomic_write_file(dir / "v_signal.json", signal_to_json(v).dump(2) + "\n");
            Json config = red_src.describe();
            config["t_final"] = red_T;
            emit_summary("reduce", kExitOk, config, Json{{"sup_deviation", dev}},
                         Json{{"tds", (dir / "tds.csv").string()},
                              {"ode", (dir / "ode.csv").string()},
                              {"v_signal", (dir / "v_signal.json").string()}});
            return kExitOk;
        }

        if (*lift) {
            SystemDef sys = lift_src.load();
            std::vector<double> z0 = parse_list(lift_z0, 0.0); // comma list reuse
            InputSignal v = signal_from_json(Json::parse(read_file(lift_v)));
            PiecewiseHistory x0 = lift_history(sys, z0, v, lift_delta);

            // Round trip: the lifted history must replay the signal dynamics.
            InputSignal u_zero = sys.input_dim() == 0
                                     ? empty_signal()
                                     : InputSignal::zero(sys.input_dim(), lift_delta);
            Trajectory tds = solve_tds(sys, x0, u_zero, lift_delta);
            Trajectory ode = solve_ode(sys, z0, v, u_zero, lift_delta);
            double dev = sup_deviation(tds, ode, 256);

            fs::path dir(lift_out);
            atomic_write_file(dir / "lifted_history.json", history_to_json(x0).dump(2) + "\n");
            Json config = lift_src.describe();
            config["delta"] = lift_delta;
            emit_summary("lift", kExitOk, config, Json{{"roundtrip_sup_deviation", dev}},
                         Json{{"history", (dir / "lifted_history.json").string()}});
            return kExitOk;
        }

        if (*reach) {
            if (!reach_seed_set) throw DomainError("--seed is required for randomized commands");
            SystemDef sys = reach_src.load();
            std::vector<double> radii = parse_list(reach_radii, reach_radius);
            ReachTable table = estimate_reach(sys, radii, reach_T, reach_samples, reach_seed,
                                              reach_cfg);
            ReachBound bound = ReachBound::from_table(table);
            if (reach_extend > 1) bound = extend_reach_bound(bound, reach_extend);

            fs::path dir(reach_out);
            atomic_write_file(dir / "reach.csv", table.to_csv());
            Json bound_json = bound.to_json();
            bound_json["provenance"] = {{"seed", reach_seed},
                                        {"samples", reach_samples},
                                        {"system", sys.name()}};
            atomic_write_file(dir / "reach_bound.json", bound_json.dump(2) + "\n");

            Json config = reach_src.describe();
            config["t_final"] = reach_T;
            config["radii"] = radii;
            config["samples"] = reach_samples;
            config["seed"] = reach_seed;
            config["extend"] = reach_extend;
            emit_summary("reach", kExitOk, config,
                         Json{{"escapes", table.any_escape()},
                              {"top_estimate", table.point_at(radii.size() - 1,
                                                              table.times.size() - 1)}},
                         Json{{"table", (dir / "reach.csv").string()},
                              {"bound", (dir / "reach_bound.json").string()}});
            return kExitOk;
        }

        if (*fcp) {
            if (!fcp_seed_set) throw DomainError("--seed is required for randomized commands");
            SystemDef sys = fcp_src.load();
            FcProbeReport report = fc_probe(sys, fcp_rmax, fcp_T, fcp_samples, fcp_seed);

            Json witnesses = Json::array();
            for (const auto& w : report.witnesses)
                witnesses.push_back(Json{{"radius", w.radius},
                                         {"sample", w.sample_index},
                                         {"t_star", w.t_star},
                                         {"x0", history_to_json(w.x0)},
                                         {"u", signal_to_json(w.u)}});
            Json out{{"schema_version", 1},
                     {"r_max", report.r_max},
                     {"horizon", report.horizon},
                     {"samples", report.samples_run},
                     {"witnesses", witnesses}};
            fs::path dir(fcp_out);
            atomic_write_file(dir / "fc_report.json", out.dump(2) + "\n");

            Json config = fcp_src.describe();
            config["r_max"] = fcp_rmax;
            config["t_final"] = fcp_T;
            config["samples"] = fcp_samples;
            config["seed"] = fcp_seed;
            emit_summary("fc-probe", kExitOk, config,
                         Json{{"witness_count", report.witnesses.size()}},
                         Json{{"report", (dir / "fc_report.json").string()}});
            return kExitOk;
        }

        if (*stab) {
            if (!stab_seed_set) throw DomainError("--seed is required for randomized commands");
            SystemDef sys = stab_src.load();
            LsGaReport report = check_ls_ga(sys, parse_list(stab_eps, 0.0),
                                            parse_list(stab_radii, 0.0), stab_T, stab_samples,
                                            stab_seed);
            fs::path dir(stab_out);
            atomic_write_file(dir / "ls_ga.csv", report.to_csv());

            Json config = stab_src.describe();
            config["eps"] = stab_eps;
            config["radii"] = stab_radii;
            config["horizon"] = stab_T;
            config["samples"] = stab_samples;
            config["seed"] = stab_seed;
            emit_summary("stability", kExitOk, config,
                         Json{{"ls_ok", report.ls_ok()},
                              {"ga_converged", report.ga_converged},
                              {"ga_total", report.ga.size()}},
                         Json{{"report", (dir / "ls_ga.csv").string()}});
            return kExitOk;
        }

        if (*ver) {
            if (!ver_seed_set) throw DomainError("--seed is required for randomized commands");
            SystemDef sys = ver_src.load();
            if (!ver_radii.empty()) ver_opts.radii = parse_list(ver_radii, 0.0);
            PipelineResult res = run_gas_ugas_pipeline(sys, ver_opts);

            fs::path dir(ver_out);
            Json env{{"schema_version", 1},
                     {"envelope", res.uniform.to_json()},
                     {"inner_envelope", res.inner.to_json()},
                     {"mu", res.mu.to_json()},
                     {"kappa", res.kappa.to_json()},
                     {"margins", Json{{"fit", ver_opts.margin}}},
                     {"provenance",
                      Json{{"seed", ver_opts.seed},
                           {"fit_samples", ver_opts.fit_samples},
                           {"check_samples", ver_opts.check_samples},
                           {"horizon", ver_opts.horizon},
                           {"system", sys.name()}}}};
            atomic_write_file(dir / "envelope.json", env.dump(2) + "\n");
            atomic_write_file(dir / "violations.csv", res.report.to_csv());

            int code = res.report.violations.empty() ? kExitOk : kExitNumeric;
            Json config = ver_src.describe();
            config["horizon"] = ver_opts.horizon;
            config["fit_samples"] = ver_opts.fit_samples;
            config["check_samples"] = ver_opts.check_samples;
            config["seed"] = ver_opts.seed;
            emit_summary("verify", code, config,
                         Json{{"violations", res.report.violations.size()},
                              {"checks", res.report.checks},
                              {"min_margin", res.report.min_margin}},
                         Json{{"envelope", (dir / "envelope.json").string()},
                              {"violations", (dir / "violations.csv").string()}});
            return code;
        }

        if (*cat) {
            Json listing = Json::array();
            for (const auto& name : catalog_names()) {
                SystemDef sys = load_catalog(name);
                listing.push_back(Json{{"name", sys.name()},
                                       {"description", sys.description()},
                                       {"n", sys.state_dim()},
                                       {"m", sys.input_dim()},
                                       {"delays", sys.delays().values()},
                                       {"zero_equilibrium", sys.zero_equilibrium()},
                                       {"has_kappa", sys.kappa().has_value()}});
            }
            emit_summary("catalog", kExitOk, Json::object(), Json{{"systems", listing}},
                         Json::object());
            return kExitOk;
        }
    } catch (const EnvelopeRefusal& e) {
        std::cerr << "refused: " << e.what() << "\n";
        emit_summary(app.get_subcommands().front()->get_name(), kExitNumeric, Json::object(),
                     Json{{"error", e.what()}}, Json::object());
        return kExitNumeric;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const EvalOverflow& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    return kExitOk;
}

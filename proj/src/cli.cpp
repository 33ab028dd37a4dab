// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include "stackdelay/errors.hpp"
#include "stackdelay/io.hpp"

namespace stackdelay {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string path_in(const RunConfig& rc, const std::string& file) { return rc.out_dir + "/" + file; }

}  // namespace

int cmd_validate(const RunConfig& rc, std::ostream& out) {
    ValidatedSpec vs = rc.validated();
    out << "grid: N = " << vs.grid.N << ", dt = " << vs.grid.dt << ", d = " << vs.grid.d << "\n";
    Schedule P1 = solve_P1(vs, rc.integ);
    Schedule O1 = omega1_schedule(vs, P1);
    HatCoefficients hats = build_hats(vs, P1, O1);
    Schedule P2 = solve_P2(vs, hats, rc.integ);
    compute_omegas(vs, P1, P2, hats);
    std::vector<AssumptionReport> reps{check_A1(vs, P1), check_A2(vs, P2), check_A3(vs, P1, O1)};
    if (vs.n() == 1 && vs.k1() == 1 && vs.k2() == 1) reps.push_back(check_one_dim_conditions(vs));
    bool ok = true;
    for (const auto& r : reps) {
        out << r.summary() << "\n";
        ok = ok && r.pass;
    }
    out << (ok ? "validate: all checks pass" : "validate: FAILED") << "\n";
    return ok ? 0 : 1;
}

int cmd_solve(const RunConfig& rc, std::ostream& out) {
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult r = run_pipeline(rc.validated(), rc.integ);
    ensure_dir(rc.out_dir);
    write_riccati_csv(path_in(rc, "riccati.csv"), r);
    write_coupled_csv(path_in(rc, "coupled.csv"), r);
    write_gains_csv(path_in(rc, "gains.csv"), r);
    write_stacked_csv(path_in(rc, "stacked.csv"), r);
    if (rc.pi_band) write_pi_band_csv(path_in(rc, "pi_band.csv"), r);
    ResidualReport res = residual_check(r.sol, r.st, r.om);
    const double tol = 1e-12 * (1.0 + r.sol.max_norm());
    char line[256];
    std::snprintf(line, sizeof line,
                  "solve: P1(0) = %.10g, max|L| = %.6g, max|Pi| = %.6g, residual defect = %.3g (tol %.3g), "
                  "asymmetry L %.3g Pi %.3g, %.2f s\n",
                  r.P1[0](0, 0), r.sol.L.max_norm(), r.sol.max_norm(), res.defect, tol, r.sol.asym_L, r.sol.asym_Pi,
                  seconds_since(t0));
    out << line;
    out << "solve: wrote riccati.csv coupled.csv gains.csv stacked.csv" << (rc.pi_band ? " pi_band.csv" : "")
        << " to " << rc.out_dir << "\n";
    return res.defect <= tol ? 0 : 1;
}

int cmd_simulate(const RunConfig& rc, std::ostream& out) {
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult r = run_pipeline(rc.validated(), rc.integ);
    SimTables tb = build_sim_tables(r);
    McOptions mo;
    mo.paths = rc.paths;
    mo.seed = rc.seed;
    mo.checkpoints = rc.checkpoints;
    mo.workers = rc.workers;
    McReport rep = run_monte_carlo(tb, mo);
    ensure_dir(rc.out_dir);
    write_json(path_in(rc, "mc_summary.json"), to_json(rep));
    write_checkpoints_csv(path_in(rc, "checkpoints.csv"), rep);
    write_controls_csv(path_in(rc, "controls.csv"), tb.g, rep);
    const std::size_t ex = std::min<std::size_t>(static_cast<std::size_t>(rc.export_paths), rc.paths);
    for (std::size_t p = 0; p < ex; ++p) {
        char name[32];
        std::snprintf(name, sizeof name, "path_%04zu.csv", p);
        write_path_csv(path_in(rc, name), tb, simulate_path(tb, rc.seed, p));
    }
    char line[256];
    std::snprintf(line, sizeof line, "simulate: %zu paths, J1 = %.8g +- %.3g, J2 = %.8g +- %.3g, max|u| = %.3g, %.2f s\n",
                  rep.paths, rep.J1, rep.J1_se, rep.J2, rep.J2_se, rep.max_abs_u, seconds_since(t0));
    out << line;
    return 0;
}

int cmd_perturb(const RunConfig& rc, std::ostream& out) {
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult r = run_pipeline(rc.validated(), rc.integ);
    SimTables tb = build_sim_tables(r);
    PerturbOptions po;
    po.paths = rc.paths;
    po.seed = rc.seed;
    po.workers = rc.workers;
    po.epsilons = rc.epsilons;
    po.directions = rc.directions;
    po.leader = rc.leader;
    OptimalityReport rep = perturbation_test(tb, po);
    ensure_dir(rc.out_dir);
    write_json(path_in(rc, "optimality.json"), to_json(rep));
    char line[256];
    for (const auto& e : rep.follower) {
        std::snprintf(line, sizeof line, "  follower %-8s eps %-5g dJ1 = %+.4e  se %.2e  %s\n", e.direction.c_str(),
                      e.eps, e.mean, e.se, e.pass ? "ok" : "FAIL");
        out << line;
    }
    for (const auto& c : rep.curvature) {
        std::snprintf(line, sizeof line, "  follower %-8s fit dJ1 = %+.4e eps %+.4e eps^2  %s\n", c.direction.c_str(),
                      c.a, c.b, c.pass ? "ok" : "FAIL");
        out << line;
    }
    for (const auto& e : rep.leader) {
        std::snprintf(line, sizeof line, "  leader   %-8s eps %-5g dJ2/deps = %+.4e  se %.2e  fp %.1e  %s\n",
                      e.direction.c_str(), e.eps, e.mean, e.se, e.roundoff, e.pass ? "ok" : "FAIL");
        out << line;
    }
    std::snprintf(line, sizeof line, "perturb (%s leader response, %zu paths): %s, %.2f s\n", rep.leader_variant.c_str(),
                  rep.paths, rep.pass() ? "pass" : "FAILED", seconds_since(t0));
    out << line;
    return rep.pass() ? 0 : 1;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Stackelberg strategies for delayed linear-quadratic stochastic games"};
    app.require_subcommand(1);

    struct Flags {
        std::string config, out, integrator, leader;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> paths;
        std::optional<int> grid, workers;
        bool print_config = false;
        bool perturb = false;
    } f;

    auto add_common = [&](CLI::App* s, bool needs_config) {
        auto* c = s->add_option("--config", f.config, "JSON config file");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        s->add_option("--out", f.out, "output directory");
        s->add_option("--seed", f.seed, "Monte Carlo seed");
        s->add_option("--paths", f.paths, "Monte Carlo paths");
        s->add_option("--grid", f.grid, "grid size N (step = T/(N+1))");
        s->add_option("--workers", f.workers, "worker threads");
        s->add_option("--integrator", f.integrator, "euler|rk4");
        s->add_option("--leader-response", f.leader, "fixed|exact");
        s->add_flag("--print-config", f.print_config, "print the resolved config and exit");
    };
    std::vector<std::pair<std::string, CLI::App*>> subs;
    const std::pair<const char*, const char*> cmds[] = {
        {"validate", "check the standing assumptions"},
        {"solve", "solve the Riccati and coupled equations, write gain schedules"},
        {"simulate", "Monte Carlo closed-loop paths and costs"},
        {"perturb", "perturbation test of equilibrium optimality"}};
    for (const auto& [name, help] : cmds) {
        CLI::App* s = app.add_subcommand(name, help);
        add_common(s, true);
        subs.emplace_back(name, s);
    }
    for (const char* name : {"example1", "example2"}) {
        CLI::App* s = app.add_subcommand(name, std::string("run the built-in ") + name + " configuration");
        add_common(s, false);
        s->add_flag("--perturb", f.perturb, "also run the perturbation test");
        subs.emplace_back(name, s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    std::string cmd;
    for (const auto& s : subs)
        if (s.second->parsed()) cmd = s.first;

    try {
        nlohmann::json j;
        if (cmd == "example1" || cmd == "example2") {
            j = builtin_config(cmd == "example1" ? 1 : 2);
        } else {
            std::ifstream in(f.config);
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("BadConfig", std::string("malformed JSON: ") + e.what());
            }
        }
        if (!j.is_object()) throw ConfigError("BadConfig", "config must be a JSON object");
        if (f.seed) j["simulation"]["seed"] = *f.seed;
        if (f.paths) j["simulation"]["paths"] = *f.paths;
        if (f.workers) j["simulation"]["workers"] = *f.workers;
        if (f.grid) j["grid"] = {{"N", *f.grid}};
        if (!f.out.empty()) j["output"]["directory"] = f.out;
        if (!f.integrator.empty()) j["solver"]["integrator"] = f.integrator;
        if (!f.leader.empty()) j["verification"]["leader_response"] = f.leader;
        if (f.print_config) {
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        RunConfig rc = parse_config(j);
        rc.validated();

        if (cmd == "validate") return cmd_validate(rc, std::cout);
        if (cmd == "solve") return cmd_solve(rc, std::cout);
        if (cmd == "simulate") return cmd_simulate(rc, std::cout);
        if (cmd == "perturb") return cmd_perturb(rc, std::cout);

        int code = cmd_validate(rc, std::cout);
        code = std::max(code, cmd_solve(rc, std::cout));
        code = std::max(code, cmd_simulate(rc, std::cout));
        if (f.perturb) code = std::max(code, cmd_perturb(rc, std::cout));
        return code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what();
        if (e.node() >= 0) std::cerr << " [node " << e.node() << "]";
        std::cerr << "\n";
        return e.is_config_error() ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace stackdelay

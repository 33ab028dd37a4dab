// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "stackdelay/cli.hpp"
#include "stackdelay/simulator.hpp"
#include "support/example2_oracle.hpp"
#include "support/fixtures.hpp"

using namespace stackdelay;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string f(const char* fmt, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, x);
    return buf;
}

double close(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff()); }

int workers() { return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency()))); }

double band_max(const CoupledSolution& sol) {
    double m = 0.0;
    for (const Mat& b : sol.band) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
}

Outcome ac1(double& seconds) {
    auto t0 = std::chrono::steady_clock::now();
    RunConfig rc = fx::config(fx::example_json(1));
    PipelineResult r = run_pipeline(rc.validated(), rc.integ);
    const int N = r.vs.grid.N, last = r.sol.L.last();
    const double L = fx::max_abs(r.sol.L, r.sol.L.first(), last);
    const double Pi = std::max(band_max(r.sol), fx::max_abs(r.sol.PiInt, r.sol.PiInt.first(), r.sol.PiInt.last()));
    const double K1 = std::max(fx::max_abs(r.gains.Ku1_now, 0, N + 1), fx::max_abs(r.gains.Ku1_pred, 0, N + 1));
    const double K2 = fx::max_abs(r.gains.Ku2, 0, N + 1);
    McOptions mo;
    mo.paths = rc.paths;
    mo.seed = rc.seed;
    mo.workers = workers();
    McReport mc = run_monte_carlo(build_sim_tables(r), mo);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = L <= 1e-12 && Pi <= 1e-12 && K1 <= 1e-12 && K2 <= 1e-12 && mc.max_abs_u == 0.0 && seconds < 5.0;
    o.detail = "max|L|=" + f("%.3g", L) + " max|Pi|=" + f("%.3g", Pi) + " max|Ku1|=" + f("%.3g", K1) +
               " max|Ku2|=" + f("%.3g", K2) + " max|u| over " + std::to_string(mc.paths) + " paths=" +
               f("%.3g", mc.max_abs_u);
    return o;
}

Outcome ac2(double& seconds) {
    auto t0 = std::chrono::steady_clock::now();
    ValidatedSpec vs = fx::spec(fx::example_json(2));
    Schedule pe = solve_P1(vs, Integrator::Euler);
    Schedule pr = solve_P1(vs, Integrator::RK4);
    HatCoefficients h = build_hats(vs, pe, omega1_schedule(vs, pe));
    Schedule P2 = solve_P2(vs, h, Integrator::Euler);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    oracle::Rivalry rv;
    double ee = 0.0, er = 0.0;
    for (int k = 0; k <= vs.grid.N; ++k) {
        const double ref = rv.P1(vs.grid.t(k));
        ee = std::max(ee, std::fabs(pe[k](0, 0) - ref) / ref);
        er = std::max(er, std::fabs(pr[k](0, 0) - ref) / ref);
    }
    const double p0 = pr[0](0, 0);
    const double p2 = fx::max_abs(P2, P2.first(), P2.last());
    Outcome o;
    o.pass = ee <= 1e-3 && er <= 1e-8 && std::fabs(p0 - 9.1939e-3) <= 5e-8 && p2 == 0.0 && seconds < 1.0;
    o.detail = "euler rel=" + f("%.3g", ee) + " rk4 rel=" + f("%.3g", er) + " P1(0)=" + f("%.7e", p0) +
               " max|P2|=" + f("%.3g", p2);
    return o;
}

Outcome ac3(double& seconds) {
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult r = fx::pipeline(2);
    oracle::Rivalry rv;
    const TimeGrid& g = r.vs.grid;
    const int N = g.N, d = g.d;
    double xi = 0.0, gain = 0.0;

    auto xi_gap = [&](const Mat& L, int k) {
        XiTriple x = build_xi(r.st, L, omega3_inv_lag(r.om, g, k), k);
        oracle::Xi o = k >= d ? oracle::xi_after_delay(rv, r.P1[k](0, 0), L) : oracle::xi_before_delay();
        return std::max({close(x.Xi1, o.xi1), close(x.Xi2, o.xi2), close(x.Xi3, o.xi3)});
    };
    auto gain_gap = [&](const CoupledSolution& sol, const GainSchedule& gs, int k) {
        const int q = k + d;
        const double P = r.P1[q](0, 0);
        const oracle::M2 L = sol.L[q], PI = sol.PiInt[q];
        return std::max(close(gs.Ku2[k], Mat(oracle::K2(rv, P, L, PI))),
                        close(gs.Ku1_pred[k], Mat(oracle::K1(rv, P, L, PI))));
    };

    std::mt19937_64 rng(20260501);
    std::uniform_int_distribution<int> any(0, N - d), base(0, N - d);
    CoupledSolution sol = r.sol;
    std::vector<int> nodes;
    for (int t = 0; t < 50; ++t) {
        const Mat L = fx::random_sym(rng, 2, 0.02);
        xi = std::max(xi, xi_gap(L, any(rng)));
        const int k = base(rng);
        sol.L[k + d] = fx::random_sym(rng, 2, 0.02);
        sol.PiInt[k + d] = fx::random_sym(rng, 2, 0.01);
        nodes.push_back(k);
    }
    GainSchedule gs;
    gs.Ku2 = compute_leader_gain(r.st, sol, r.om);
    compute_follower_gains(r.vs, r.P1, r.st, sol, r.om, gs);
    for (int k : nodes) gain = std::max(gain, gain_gap(sol, gs, k));

    for (int k = 0; k <= N - d; ++k) {
        xi = std::max(xi, xi_gap(r.sol.L[k], k));
        gain = std::max(gain, gain_gap(r.sol, r.gains, k));
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = xi <= 1e-12 && gain <= 1e-12;
    o.detail = "Xi gap=" + f("%.3g", xi) + " K1/K2 gap=" + f("%.3g", gain) + " (50 random L + trajectory)";
    return o;
}

Outcome ac4(double& seconds) {
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult r[3] = {fx::pipeline(2, 999), fx::pipeline(2, 1999), fx::pipeline(2, 3999)};
    bool res_ok = true;
    std::string res;
    for (const auto& x : r) {
        ResidualReport rep = residual_check(x.sol, x.st, x.om);
        const double tol = 1e-12 * (1.0 + x.sol.max_norm());
        res_ok = res_ok && rep.defect <= tol;
        res += " " + f("%.2g", rep.defect);
    }
    const int Nc = r[0].vs.grid.N;
    double a = 0.0, b = 0.0;
    for (int k = 0; k <= Nc + 1; ++k) {
        a = std::max(a, (r[0].sol.L[k] - r[1].sol.L[2 * k]).cwiseAbs().maxCoeff());
        b = std::max(b, (r[1].sol.L[2 * k] - r[2].sol.L[4 * k]).cwiseAbs().maxCoeff());
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double ratio = a / b;
    Outcome o;
    o.pass = ratio >= 1.5 && ratio <= 2.5 && res_ok;
    o.detail = "ratio=" + f("%.4f", ratio) + " (" + f("%.3g", a) + " / " + f("%.3g", b) + ") defects" + res;
    return o;
}

Outcome ac5(double& seconds) {
    RunConfig rc = fx::config(fx::example_json(2));
    PipelineResult r = run_pipeline(rc.validated(), rc.integ);
    SimTables tb = build_sim_tables(r);
    auto t0 = std::chrono::steady_clock::now();
    PerturbOptions po;
    po.paths = 10000;
    po.seed = rc.seed;
    po.workers = workers();
    po.epsilons = {0.01, 0.05, 0.1};
    po.directions = {"constant", "sin", "ramp"};
    po.leader = rc.leader;
    OptimalityReport rep = perturbation_test(tb, po);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double worst_f = 1e300, min_b = 1e300, worst_l = 0.0;
    bool curv = true;
    for (const auto& e : rep.follower) worst_f = std::min(worst_f, e.mean + 3.0 * e.se);
    for (const auto& c : rep.curvature) {
        min_b = std::min(min_b, c.b);
        curv = curv && c.pass && c.b > 0.0;
    }
    for (const auto& e : rep.leader) worst_l = std::max(worst_l, std::fabs(e.mean) / (3.0 * e.se + e.roundoff));
    Outcome o;
    o.pass = rep.pass() && curv && rep.follower.size() == 9 && rep.leader.size() == 9 && seconds < 120.0;
    o.detail = std::string("leader=") + rep.leader_variant + " min(dJ1+3SE)=" + f("%.3g", worst_f) +
               " min curvature=" + f("%.3g", min_b) + " max |dJ2|/band=" + f("%.3g", worst_l);
    return o;
}

McReport rivalry_mc(std::size_t paths) {
    RunConfig rc = fx::config(fx::example_json(2));
    PipelineResult r = run_pipeline(rc.validated(), rc.integ);
    McOptions mo;
    mo.paths = paths;
    mo.seed = rc.seed;
    mo.checkpoints = 10;
    mo.workers = workers();
    return run_monte_carlo(build_sim_tables(r), mo);
}

Outcome ac6(double& seconds, const McReport& mc) {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const Checkpoint& c : mc.checkpoints)
        for (Eigen::Index i = 0; i < c.mean_phi.size(); ++i) {
            const double band = 3.0 * std::hypot(c.se_phi(i), c.se_pred(i));
            worst = std::max(worst, std::fabs(c.mean_pred(i) - c.mean_phi(i)) / band);
        }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = mc.paths == 10000 && mc.checkpoints.size() == 10 && worst <= 1.0;
    o.detail = std::to_string(mc.checkpoints.size()) + " checkpoints, max |gap|/(3 SE)=" + f("%.3f", worst);
    return o;
}

Outcome ac7(double& seconds, const McReport& mc) {
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult r = fx::pipeline(2);
    const int N = r.vs.grid.N;
    bool pos = true, dec = true;
    for (int k = 0; k <= N; ++k) {
        pos = pos && r.P1[k](0, 0) > 0.0;
        dec = dec && r.P1[k + 1](0, 0) < r.P1[k](0, 0);
    }
    const bool zero_end = r.P1[N + 1](0, 0) == 0.0;
    int major = 0;
    for (size_t k = 0; k < mc.mean_abs_u1.size(); ++k) major += mc.mean_abs_u2[k] >= mc.mean_abs_u1[k] ? 1 : 0;
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = pos && dec && zero_end && 2 * major > static_cast<int>(mc.mean_abs_u1.size());
    o.detail = std::string("P1 positive=") + (pos ? "yes" : "no") + " decreasing=" + (dec ? "yes" : "no") +
               " P1(T)=0 " + (zero_end ? "yes" : "no") + "; mean|u2|>=mean|u1| at " + std::to_string(major) + "/" +
               std::to_string(mc.mean_abs_u1.size()) + " nodes (max mean|u2|=" +
               f("%.3g", *std::max_element(mc.mean_abs_u2.begin(), mc.mean_abs_u2.end())) + ")";
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome ac8(double& seconds) {
    auto t0 = std::chrono::steady_clock::now();
    const fs::path root = fs::temp_directory_path() / ("stackdelay_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    RunConfig rc = fx::config(fx::example_json(2));
    std::ostringstream sink;
    rc.workers = 1;
    rc.out_dir = (root / "w1").string();
    int c1 = cmd_simulate(rc, sink);
    rc.workers = 4;
    rc.out_dir = (root / "w4").string();
    int c2 = cmd_simulate(rc, sink);
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(root / "w1")) {
        ++files;
        const fs::path other = root / "w4" / e.path().filename();
        same += fs::exists(other) && slurp(e.path()) == slurp(other) ? 1 : 0;
    }
    int other_files = static_cast<int>(std::distance(fs::directory_iterator(root / "w4"), fs::directory_iterator()));
    fs::remove_all(root);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = c1 == 0 && c2 == 0 && files > 0 && same == files && other_files == files;
    o.detail = std::to_string(same) + "/" + std::to_string(files) + " files identical (workers 1 vs 4, " +
               std::to_string(rc.paths) + " paths)";
    return o;
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](const char* id, const char* what, bool gating, const std::function<Outcome(double&)>& fn) {
        double s = 0.0;
        Outcome o;
        try {
            o = fn(s);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (gating && !o.pass) ++failed;
        std::printf("%s %s  %s%s: %s [%.2f s]\n", id, o.pass ? "PASS" : "FAIL", what, gating ? "" : " (non-gating)",
                    o.detail.c_str(), s);
        std::fflush(stdout);
    };
    report("AC1", "analytic example exact zero solution", true, ac1);
    report("AC2", "Riccati closed-form agreement", true, ac2);
    report("AC3", "scalar-block oracle equivalence", true, ac3);
    report("AC4", "grid refinement and residual", true, ac4);
    report("AC5", "Monte Carlo optimality", true, ac5);
    McReport mc;
    double mc_s = 0.0;
    {
        auto t0 = std::chrono::steady_clock::now();
        mc = rivalry_mc(10000);
        mc_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    report("AC6", "predictor tower property", true, [&](double& s) {
        Outcome o = ac6(s, mc);
        s += mc_s;
        return o;
    });
    report("AC7", "qualitative rivalry reproduction", false, [&](double& s) { return ac7(s, mc); });
    report("AC8", "determinism across worker counts", true, ac8);
    std::printf("%d gating criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}

// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "stackdelay/errors.hpp"
#include "stackdelay/feedback_gains.hpp"
#include "support/example2_oracle.hpp"
#include "support/fixtures.hpp"

using namespace stackdelay;

namespace {

double rel(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff()); }

// worst disagreement with the hand-written gains over base nodes [lo, hi]
double gain_gap(const PipelineResult& r, const CoupledSolution& sol, const GainSchedule& gs, int lo, int hi) {
    oracle::Rivalry rv;
    const int d = r.vs.grid.d;
    double worst = 0.0;
    for (int k = lo; k <= hi; ++k) {
        const int q = k + d;
        const double P = r.P1[q](0, 0);
        const oracle::M2 L = sol.L[q];
        const oracle::M2 PI = sol.PiInt[q];
        worst = std::max(worst, rel(gs.Ku2[k], Mat(oracle::K2(rv, P, L, PI))));
        worst = std::max(worst, rel(gs.Ku1_pred[k], Mat(oracle::K1(rv, P, L, PI))));
    }
    return worst;
}

}  // namespace

TEST_CASE("analytic example has zero gains") {
    PipelineResult r = fx::pipeline(1);
    const int N = r.vs.grid.N;
    CHECK(fx::max_abs(r.gains.Ku2, 0, N + 1) == 0.0);
    CHECK(fx::max_abs(r.gains.Ku1_now, 0, N + 1) == 0.0);
    CHECK(fx::max_abs(r.gains.Ku1_pred, 0, N + 1) == 0.0);
}

TEST_CASE("rivalry gains on the solved trajectory match the scalar displays") {
    PipelineResult r = fx::pipeline(2);
    const int N = r.vs.grid.N, d = r.vs.grid.d;
    CHECK(gain_gap(r, r.sol, r.gains, 0, N - d) <= 1e-12);
    CHECK(fx::max_abs(r.gains.Ku1_now, 0, N + 1) == 0.0);
    for (int k = 0; k <= N + 1; ++k) {
        CHECK(r.gains.Ku2[k].allFinite());
        CHECK(r.gains.Ku1_pred[k].allFinite());
    }
    CHECK(std::fabs(r.gains.Ku2[0](0, 0)) > 0.1);
}

TEST_CASE("rivalry gains for random symmetric L") {
    PipelineResult r = fx::pipeline(2);
    const int N = r.vs.grid.N, d = r.vs.grid.d;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> pick(0, N - d);
    CoupledSolution sol = r.sol;
    std::vector<int> nodes;
    for (int t = 0; t < 50; ++t) {
        const int k = pick(rng);
        sol.L[k + d] = fx::random_sym(rng, 2, 0.02);
        sol.PiInt[k + d] = fx::random_sym(rng, 2, 0.01);
        nodes.push_back(k);
    }
    GainSchedule gs;
    gs.Ku2 = compute_leader_gain(r.st, sol, r.om);
    compute_follower_gains(r.vs, r.P1, r.st, sol, r.om, gs);
    double worst = 0.0;
    for (int k : nodes) worst = std::max(worst, gain_gap(r, sol, gs, k, k));
    CHECK(worst <= 1e-12);
}

TEST_CASE("psi reconstruction") {
    PipelineResult r = fx::pipeline(2);
    const int d = r.vs.grid.d;
    Vec phi(2), hat(2);
    phi << 0.3, 1.2;
    hat << -0.4, 0.8;
    auto constant = [&](int) { return hat; };
    for (int k : {d, d + 37, r.vs.grid.N + 1}) {
        Vec psi = reconstruct_psi(r.sol, phi, constant, k);
        Vec want = r.sol.L[k] * phi - r.sol.PiInt[k] * hat;
        CHECK((psi - want).cwiseAbs().maxCoeff() <= 1e-15);
    }
    CHECK_THROWS_AS(reconstruct_psi(r.sol, phi, constant, d - 1), IndexOutOfRange);
}

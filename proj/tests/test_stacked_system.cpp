// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "stackdelay/errors.hpp"
#include "stackdelay/riccati_solver.hpp"
#include "stackdelay/stacked_system.hpp"
#include "support/example2_oracle.hpp"
#include "support/fixtures.hpp"

using namespace stackdelay;

namespace {

struct Built {
    ValidatedSpec vs;
    Schedule P1, O1, P2;
    HatCoefficients h;
    Omegas om;
    StackedCoefficients st;
};

Built build(const ValidatedSpec& vs) {
    Built b{vs, {}, {}, {}, {}, {}, {}};
    b.P1 = solve_P1(vs);
    b.O1 = omega1_schedule(vs, b.P1);
    b.h = build_hats(vs, b.P1, b.O1);
    b.P2 = solve_P2(vs, b.h);
    b.om = compute_omegas(vs, b.P1, b.P2, b.h);
    b.st = build_calligraphic(vs, b.h, b.P2, b.om);
    return b;
}

ValidatedSpec random_spec(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    auto rm = [&](int r, int c) {
        Mat m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = u(rng);
        return CoeffFn::constant(m);
    };
    const int n = 2, k1 = 1, k2 = 1;
    GameSpec s;
    s.T = 2.0;
    s.delta = 0.5;
    s.n = n;
    s.k1 = k1;
    s.k2 = k2;
    s.A = rm(n, n);
    s.Abar = rm(n, n);
    s.C = rm(n, n);
    s.Cbar = rm(n, n);
    s.B1bar = rm(n, k1);
    s.D1bar = rm(n, k1);
    s.B2bar = rm(n, k2);
    s.D2bar = rm(n, k2);
    s.Q1 = s.Q2 = CoeffFn::constant(Mat::Identity(n, n));
    s.Q1bar = s.Q2bar = CoeffFn::constant(0.1 * Mat::Identity(n, n));
    s.R1 = CoeffFn::constant(Mat::Identity(k1, k1));
    s.R2 = CoeffFn::constant(Mat::Identity(k2, k2));
    s.R1bar = CoeffFn::zero(k1, k1);
    s.R2bar = CoeffFn::zero(k2, k2);
    s.G1 = s.G2 = Mat::Identity(n, n);
    s.phi = CoeffFn::constant(Vec::Ones(n));
    s.eta1 = CoeffFn::constant(Mat::Constant(k1, 1, 0.5));
    s.eta2 = CoeffFn::constant(Mat::Constant(k2, 1, -0.5));
    return validate_spec(s, make_grid(2.0, 0.5, 39));
}

Mat J2() {
    Mat j(2, 2);
    j << 0, 1, 1, 0;
    return j;
}

double close(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff()); }

}  // namespace

TEST_CASE("rivalry hat coefficients") {
    Built b = build(fx::spec(fx::example_json(2)));
    oracle::Rivalry r;
    const int N = b.vs.grid.N, d = b.vs.grid.d;
    // at T itself P1 = 0 and the display degenerates
    for (int k = d; k <= N; ++k) {
        CHECK(b.h.A1[k](0, 0) == doctest::Approx(-r.gamma / 2));
        CHECK(b.h.C1[k](0, 0) == r.C);
        CHECK(std::fabs(b.h.C2[k](0, 0)) <= 1e-15);
        CHECK(std::fabs(b.h.D[k](0, 0)) <= 1e-15);
        CHECK(b.h.N2[k](0, 0) == doctest::Approx(-b.P1[k](0, 0) * r.b()).epsilon(1e-14));
    }
    for (int k = 0; k < d; ++k) {
        CHECK(b.h.F[k](0, 0) == 0.0);
        CHECK(b.h.H[k](0, 0) == 0.0);
        CHECK(b.h.K[k](0, 0) == 0.0);
        CHECK(b.h.M[k](0, 0) == 0.0);
    }
}

TEST_CASE("only A is nonzero when every other coefficient vanishes") {
    fx::json j = fx::example_json(2);
    auto& c = j["game"]["coefficients"];
    for (const char* k : {"C", "B1bar", "D1bar", "B2bar", "D2bar", "Q1", "Q1bar", "Q2", "Q2bar", "R1bar", "R2bar"})
        c[k] = 0.0;
    Built b = build(fx::spec(j));
    for (int k = 0; k <= b.vs.grid.last(); ++k) {
        CHECK(b.h.A1[k](0, 0) == doctest::Approx(-0.01));
        for (const Schedule* s : {&b.h.A2, &b.h.A2t, &b.h.C1, &b.h.C2, &b.h.C2t, &b.h.B, &b.h.D, &b.h.F, &b.h.H,
                                  &b.h.K, &b.h.M, &b.h.N1, &b.h.N2})
            CHECK((*s)[k](0, 0) == 0.0);
    }
}

TEST_CASE("rivalry calligraphic blocks") {
    Built b = build(fx::spec(fx::example_json(2)));
    oracle::Rivalry r;
    const int N = b.vs.grid.N, d = b.vs.grid.d;
    const Mat I = Mat::Identity(2, 2);
    for (int k = 0; k <= N; ++k) {
        const double P = b.P1[k](0, 0), ind = k >= d ? 1.0 : 0.0;
        CHECK(close(b.st.A1[k], -r.gamma / 2 * I) <= 1e-15);
        CHECK(close(b.st.B[k], -r.C * r.C / P * ind * J2()) <= 1e-12);
        CHECK(close(b.st.C[k], r.C / P * ind * J2()) <= 1e-12);
        CHECK(close(b.st.Cb[k], -1.0 / P * ind * J2()) <= 1e-12);
        CHECK(close(b.st.Ab1[k], r.C * I) <= 1e-15);
        Mat D(2, 1), G2(2, 1);
        D << 0, r.B2() + r.C * r.D2() * ind;
        G2 << -P * r.b(), 0;
        CHECK(close(b.st.D[k], D) <= 1e-14);
        CHECK(close(b.st.G2[k], G2) <= 1e-14);
        for (const Schedule* s : {&b.st.A2, &b.st.A3, &b.st.Ab2, &b.st.Ab3, &b.st.E})
            CHECK((*s)[k].cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(b.st.G1[k].cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("analytic example calligraphic blocks") {
    Built b = build(fx::spec(fx::example_json(1)));
    const int N = b.vs.grid.N;
    for (int k = 0; k <= N; ++k) {
        CHECK(b.st.B[k] == b.st.C[k]);
        CHECK(b.st.C[k] == b.st.Cb[k]);
        CHECK(close(b.st.Ab1[k], -Mat::Identity(2, 2)) == 0.0);
        const double tol = 1e-15 * (1.0 + b.P1[0](0, 0));
        for (const Schedule* s : {&b.st.A1, &b.st.A2, &b.st.A3, &b.st.Ab2, &b.st.Ab3, &b.st.E})
            CHECK((*s)[k].cwiseAbs().maxCoeff() <= tol);
        for (const Schedule* s : {&b.st.D, &b.st.Db, &b.st.G1, &b.st.G2, &b.st.Mv, &b.st.Mbv})
            CHECK((*s)[k].cwiseAbs().maxCoeff() <= tol);
    }
    const int d = b.vs.grid.d;
    CHECK(b.st.B[d](0, 0) + b.st.B[d](0, 1) + b.st.B[d](1, 0) + b.st.B[d](1, 1) != 0.0);
}

TEST_CASE("block consistency on random specs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Built b = build(random_spec(rng));
        const int n = b.vs.n(), top = b.vs.grid.last(), d = b.vs.grid.d;
        for (int k = 0; k <= top; ++k) {
            CHECK(b.st.A1[k].bottomRightCorner(n, n) == b.h.A1[k]);
            Mat want = b.h.K[k].transpose() * b.P2.get_or_zero(k) * b.h.C2[k];
            CHECK(close(b.st.A3[k].topRightCorner(n, n), want) <= 1e-14);
            CHECK(close(b.st.B[k], b.st.B[k].transpose()) <= 1e-14);
            CHECK(close(b.st.Cb[k], b.st.Cb[k].transpose()) <= 1e-14);
            if (k > d) {
                CHECK(b.st.Mv[k].cwiseAbs().maxCoeff() == 0.0);
                CHECK(b.st.Mbv[k].cwiseAbs().maxCoeff() == 0.0);
            }
        }
    }
}

TEST_CASE("Xi at L = 0") {
    std::mt19937_64 rng(11);
    Built b = build(random_spec(rng));
    const int d = b.vs.grid.d;
    for (int k : {0, d - 1, d, d + 5, b.vs.grid.N}) {
        const Mat W = Mat::Constant(1, 1, 0.7);
        XiTriple x = build_xi(b.st, Mat::Zero(4, 4), W, k);
        const Mat& D = b.st.D[k];
        const Mat& G = b.st.G2[k];
        CHECK(close(x.Xi1, b.st.A2[k] + D * W * G.transpose()) <= 1e-14);
        CHECK(close(x.Xi2, -b.st.B[k] + D * W * D.transpose()) <= 1e-14);
        CHECK(close(x.Xi3, G * W * G.transpose()) <= 1e-14);
    }

    Built one = build(fx::spec(fx::example_json(1)));
    const int k = one.vs.grid.d + 10;
    XiTriple x = build_xi(one.st, Mat::Zero(2, 2), Mat::Constant(1, 1, 1.0), k);
    CHECK(x.Xi1.cwiseAbs().maxCoeff() == 0.0);
    CHECK(x.Xi3.cwiseAbs().maxCoeff() == 0.0);
    CHECK(close(x.Xi2, -one.st.B[k]) <= 1e-15);
}

TEST_CASE("Xi agrees with the hand-written rivalry formulas") {
    Built b = build(fx::spec(fx::example_json(2)));
    oracle::Rivalry r;
    const int N = b.vs.grid.N, d = b.vs.grid.d;
    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<int> after(d, N - d), before(0, d - 1);
    const Mat W = Mat::Constant(1, 1, r.W());
    double worst = 0.0, asym = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int k = after(rng);
        const Mat L = fx::random_sym(rng, 2, 0.02);
        XiTriple x = build_xi(b.st, L, W, k);
        oracle::Xi o = oracle::xi_after_delay(r, b.P1[k](0, 0), L);
        worst = std::max({worst, close(x.Xi1, o.xi1), close(x.Xi2, o.xi2), close(x.Xi3, o.xi3)});
        asym = std::max(asym, close(x.Xi3, x.Xi3.transpose()));

        const int e = before(rng);
        XiTriple y = build_xi(b.st, L, Mat::Zero(1, 1), e);
        oracle::Xi p = oracle::xi_before_delay();
        worst = std::max({worst, close(y.Xi1, p.xi1), close(y.Xi2, p.xi2), close(y.Xi3, p.xi3)});
    }
    CHECK(worst <= 1e-12);
    CHECK(asym <= 1e-9);
}

TEST_CASE("singular resolvent is reported") {
    Built b = build(fx::spec(fx::example_json(2)));
    const int k = b.vs.grid.d + 50;
    const double P = b.P1[k](0, 0);
    Mat L(2, 2);
    L << P, 0, 0, P;
    double rc = 1.0;
    bool thrown = false;
    try {
        resolvent(L, b.st.Cb[k], k, &rc);
    } catch (const SingularResolvent& e) {
        thrown = true;
        CHECK(e.node() == k);
        CHECK(e.rcond() < kResolventRcond);
    }
    CHECK(thrown);
    Mat ok = resolvent(Mat::Zero(2, 2), b.st.Cb[k], k, &rc);
    CHECK(ok == Mat::Identity(2, 2));
    CHECK(rc == 1.0);
}

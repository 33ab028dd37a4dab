// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/riccati_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stackdelay/errors.hpp"
#include "stackdelay/stacked_system.hpp"

namespace stackdelay {

Integrator parse_integrator(const std::string& s) {
    if (s == "euler") return Integrator::Euler;
    if (s == "rk4") return Integrator::RK4;
    throw ConfigError("BadConfig", "unknown integrator '" + s + "' (euler|rk4)");
}

std::string to_string(Integrator i) { return i == Integrator::Euler ? "euler" : "rk4"; }

bool is_positive_definite(const Mat& m) {
    if (m.rows() != m.cols() || !m.allFinite()) return false;
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(m), Eigen::EigenvaluesOnly);
    double eps = 1e-12 * (1.0 + std::fabs(m.trace()));
    return es.eigenvalues().minCoeff() > eps;
}

Mat checked_inverse(const Mat& m, const char* name, int node) {
    if (!is_positive_definite(m)) {
        std::ostringstream os;
        os << name << " not positive definite at node " << node;
        throw OmegaNotPositiveDefinite(os.str(), node);
    }
    return m.inverse();
}

namespace {

struct Source {
    const TimeGrid& g;
    const PseudoRiccatiData& c;
    const Schedule& P;
    Schedule& Om;

    // delayed/known part of the right-hand side at node j; P(j+d) must be final
    Mat operator()(int j) {
        const int jd = j + g.d;
        const Mat Pd = jd <= g.N + 1 ? P[jd] : Mat::Zero(P.rows(), P.cols());
        const Mat& C2 = (*c.C2)[jd];
        const Mat& D = (*c.D)[jd];
        Mat om = (*c.R)[j] + (*c.Rbar)[jd] + D.transpose() * Pd * D;
        Mat oi = checked_inverse(om, c.name == std::string("P1") ? "Omega1" : "Omega2", j);
        if (Om.contains(j)) Om[j] = om;
        Mat X = C2.transpose() * Pd * D;
        return C2.transpose() * Pd * C2 + (*c.Q)[j] + (*c.Qbar)[jd] - X * oi * X.transpose();
    }
};

Mat rhs(const Mat& P, const Mat& A, const Mat& C, const Mat& S) {
    return P * A + A.transpose() * P + C.transpose() * P * C + S;
}

// Lagrange value at x from nodes xs
Mat lagrange(const std::vector<double>& xs, const std::vector<Mat>& ys, double x) {
    Mat out = Mat::Zero(ys[0].rows(), ys[0].cols());
    for (size_t i = 0; i < xs.size(); ++i) {
        double w = 1.0;
        for (size_t j = 0; j < xs.size(); ++j)
            if (j != i) w *= (x - xs[j]) / (xs[i] - xs[j]);
        out += w * ys[i];
    }
    return out;
}

}  // namespace

PseudoRiccatiResult solve_pseudo_riccati(const TimeGrid& g, const PseudoRiccatiData& c, Integrator integ) {
    const int n = static_cast<int>(c.G.rows());
    PseudoRiccatiResult res;
    res.P = Schedule(g.first(), g.last(), n, n);
    res.Omega = Schedule(0, g.N + 1, c.R->rows(), c.R->cols());
    Source S{g, c, res.P, res.Omega};
    const double h = g.dt;
    res.P[g.N + 1] = c.G;

    if (integ == Integrator::Euler) {
        for (int k = g.N; k >= 0; --k) {
            const int j = k + 1;
            Mat s = S(j);
            res.P[k] = sym(res.P[j] + h * rhs(res.P[j], (*c.A)[j], (*c.C)[j], s));
            if (!res.P[k].allFinite() || res.P[k].norm() > 1e12)
                throw NumericalBlowup(std::string(c.name) + " diverged", k);
        }
        S(0);
        return res;
    }

    // RK4 on each step; the known part is interpolated inside its smooth piece
    const int split = g.N + 1 - g.d;  // S jumps between split and split+1
    std::vector<Mat> cache(static_cast<size_t>(g.N + 2));
    std::vector<char> have(static_cast<size_t>(g.N + 2), 0);
    auto Sj = [&](int j) -> const Mat& {
        if (!have[j]) {
            cache[j] = S(j);
            have[j] = 1;
        }
        return cache[j];
    };
    for (int k = g.N; k >= 0; --k) {
        int a, b;
        if (k >= split) {
            a = split + 1;
            b = g.N + 1;
        } else {
            a = k + 1 - g.d;
            b = split;
        }
        a = std::max(a, 0);
        int cnt = std::min(4, b - a + 1);
        int s0 = std::clamp(k - 1, a, b - cnt + 1);
        std::vector<double> xs;
        std::vector<Mat> ys;
        for (int i = 0; i < cnt; ++i) {
            xs.push_back(s0 + i);
            ys.push_back(Sj(s0 + i));
        }
        Mat s_hi = lagrange(xs, ys, k + 1.0);
        Mat s_mid = lagrange(xs, ys, k + 0.5);
        Mat s_lo = lagrange(xs, ys, k);
        const Mat& A1 = (*c.A)[k + 1];
        const Mat& C1 = (*c.C)[k + 1];
        const Mat& A0 = (*c.A)[k];
        const Mat& C0 = (*c.C)[k];
        Mat Am = 0.5 * (A0 + A1), Cm = 0.5 * (C0 + C1);
        const Mat& P = res.P[k + 1];
        Mat K1 = rhs(P, A1, C1, s_hi);
        Mat K2 = rhs(P + 0.5 * h * K1, Am, Cm, s_mid);
        Mat K3 = rhs(P + 0.5 * h * K2, Am, Cm, s_mid);
        Mat K4 = rhs(P + h * K3, A0, C0, s_lo);
        res.P[k] = sym(P + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4));
        if (!res.P[k].allFinite() || res.P[k].norm() > 1e12)
            throw NumericalBlowup(std::string(c.name) + " diverged", k);
    }
    S(0);
    return res;
}

Schedule solve_P1(const ValidatedSpec& vs, Integrator integ) {
    PseudoRiccatiData c;
    c.A = &vs.A;
    c.C = &vs.C;
    c.C2 = &vs.Cbar;
    c.D = &vs.D1bar;
    c.Q = &vs.Q1;
    c.Qbar = &vs.Q1bar;
    c.R = &vs.R1;
    c.Rbar = &vs.R1bar;
    c.G = vs.G1;
    c.name = "P1";
    return solve_pseudo_riccati(vs.grid, c, integ).P;
}

Schedule solve_P2(const ValidatedSpec& vs, const HatCoefficients& hats, Integrator integ) {
    // hats live on nodes 0..N+1+d; negative nodes are never read here
    PseudoRiccatiData c;
    c.A = &hats.A1;
    c.C = &hats.C1;
    c.C2 = &hats.C2;
    c.D = &hats.D;
    c.Q = &vs.Q2;
    c.Qbar = &vs.Q2bar;
    c.R = &vs.R2;
    c.Rbar = &vs.R2bar;
    c.G = vs.G2;
    c.name = "P2";
    return solve_pseudo_riccati(vs.grid, c, integ).P;
}

Schedule closed_form_P_one_dim(const ValidatedSpec& vs, int which) {
    if (vs.n() != 1) throw NotOneDimensional("closed form needs n = 1");
    if (which != 1 && which != 2) throw ConfigError("BadArgument", "which must be 1 or 2");
    const GameSpec& s = vs.spec;
    const TimeGrid& g = vs.grid;
    const CoeffFn& Q = which == 1 ? s.Q1 : s.Q2;
    const CoeffFn& Qb = which == 1 ? s.Q1bar : s.Q2bar;
    const double G = (which == 1 ? s.G1 : s.G2)(0, 0);
    const double qb_beyond = Qb.beyond ? (*Qb.beyond)(0, 0) : 0.0;

    int m = static_cast<int>(std::ceil(g.dt / 1e-4));
    if (m % 2) ++m;
    m = std::max(m, 2);
    const double h = g.dt / m;

    Schedule P(g.first(), g.last(), 1, 1);
    double p = G;
    P[g.N + 1](0, 0) = G;
    std::vector<double> a(static_cast<size_t>(m + 1)), f(static_cast<size_t>(m + 1)), cum(static_cast<size_t>(m + 1));
    for (int k = g.N; k >= 0; --k) {
        const bool beyond = k + g.d >= g.N + 1;
        for (int i = 0; i <= m; ++i) {
            double t = g.t(k) + i * h;
            double A = s.A(t)(0, 0), C = s.C(t)(0, 0);
            a[i] = 2.0 * A + C * C;
            f[i] = Q(t)(0, 0) + (beyond ? qb_beyond : Qb(t + g.delta)(0, 0));
        }
        cum[0] = 0.0;
        for (int i = 1; i <= m; ++i) cum[i] = cum[i - 1] + 0.5 * h * (a[i - 1] + a[i]);
        double simpson = 0.0;
        for (int i = 0; i <= m; ++i) {
            double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            simpson += w * std::exp(cum[i]) * f[i];
        }
        simpson *= h / 3.0;
        p = std::exp(cum[m]) * p + simpson;
        P[k](0, 0) = p;
    }
    return P;
}

Schedule omega1_schedule(const ValidatedSpec& vs, const Schedule& P1) {
    const TimeGrid& g = vs.grid;
    Schedule O(0, g.N + 1, vs.k1(), vs.k1());
    for (int k = 0; k <= g.N + 1; ++k) {
        const int kd = k + g.d;
        Mat Pd = P1.get_or_zero(kd);
        if (kd > g.N + 1) Pd.setZero();
        O[k] = vs.R1[k] + vs.R1bar[kd] + vs.D1bar[kd].transpose() * Pd * vs.D1bar[kd];
    }
    return O;
}

Omegas compute_omegas(const ValidatedSpec& vs, const Schedule& P1, const Schedule& P2, const HatCoefficients& hats) {
    const TimeGrid& g = vs.grid;
    Omegas om;
    om.O1 = omega1_schedule(vs, P1);
    om.O2 = Schedule(0, g.N + 1, vs.k2(), vs.k2());
    om.O3 = Schedule(0, g.N + 1, vs.k2(), vs.k2());
    om.O1inv = om.O1;
    om.O2inv = om.O2;
    om.O3inv = om.O3;
    for (int k = 0; k <= g.N + 1; ++k) {
        const int kd = k + g.d;
        Mat Pd = kd <= g.N + 1 ? P2[kd] : Mat::Zero(vs.n(), vs.n());
        om.O2[k] = vs.R2[k] + vs.R2bar[kd] + hats.D[kd].transpose() * Pd * hats.D[kd];
        om.O3[k] = vs.R2[k] + vs.R2bar[kd];
        om.O1inv[k] = checked_inverse(om.O1[k], "Omega1", k);
        om.O2inv[k] = checked_inverse(om.O2[k], "Omega2", k);
        om.O3inv[k] = checked_inverse(om.O3[k], "Omega3", k);
    }
    return om;
}

}  // namespace stackdelay

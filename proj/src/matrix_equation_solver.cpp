// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/matrix_equation_solver.hpp"

#include <algorithm>
#include <sstream>

#include "stackdelay/errors.hpp"

namespace stackdelay {

namespace {

size_t slot(const TimeGrid& g, int k, int j) { return static_cast<size_t>(k) * (g.d + 1) + (j - k); }

double asym(const Mat& m) { return (m - m.transpose()).norm() / (1.0 + m.norm()); }

void guard(const Mat& m, int k, const char* what) {
    if (!m.allFinite() || m.norm() > kBlowup) {
        std::ostringstream os;
        os << what << " diverged at node " << k;
        throw NumericalBlowup(os.str(), k);
    }
}

Mat l_step(const StackedCoefficients& st, const CoupledSolution& s, int k) {
    const TimeGrid& g = s.grid;
    const Mat& L1 = s.L[k + 1];
    const Mat& A = st.A1[k + 1];
    const Mat& Ab = st.Ab1[k + 1];
    Mat out = L1 + g.dt * (L1 * A + A.transpose() * L1 + Ab.transpose() * L1 * Ab);
    if (k + 1 <= g.N + 1 - g.d) out -= g.dt * s.pi(k + 1, k + 1 + g.d);
    return out;
}

Mat diag_step(const StackedCoefficients& st, const Omegas& om, const CoupledSolution& s, int k) {
    const TimeGrid& g = s.grid;
    Mat mid = Mat::Zero(s.m, s.m);
    for (int j = k + 2; j <= std::min(g.N + 1, k + 1 + g.d); ++j) mid += s.pi(k + 1, j);
    XiTriple x = build_xi(st, s.L[k + 1], omega3_inv_lag(om, g, k + 1), k + 1);
    return g.dt * mid * x.Xi1 + g.dt * x.Xi1.transpose() * mid + g.dt * g.dt * mid * x.Xi2 * mid + x.Xi3;
}

Mat band_step(const StackedCoefficients& st, const CoupledSolution& s, int k, int i) {
    const Mat& P = s.pi(k + 1, k + i);
    const Mat& A = st.A1[k + 1];
    return P + s.grid.dt * (P * A + A.transpose() * P);
}

}  // namespace

const Mat& CoupledSolution::pi(int k, int j) const {
    if (!in_band(k, j)) throw IndexOutOfRange("Pi(" + std::to_string(k) + "," + std::to_string(j) + ") outside band");
    return band[slot(grid, k, j)];
}

Mat& CoupledSolution::pi(int k, int j) {
    if (!in_band(k, j)) throw IndexOutOfRange("Pi(" + std::to_string(k) + "," + std::to_string(j) + ") outside band");
    return band[slot(grid, k, j)];
}

double CoupledSolution::max_norm() const {
    double m = L.max_norm();
    for (const auto& p : band) m = std::max(m, p.norm());
    return m;
}

Mat omega3_inv_lag(const Omegas& om, const TimeGrid& g, int k) {
    int j = k - g.d;
    if (j < 0) return Mat::Zero(om.O3inv.rows(), om.O3inv.cols());
    return om.O3inv[j];
}

CoupledSolution solve_L_Pi(const StackedCoefficients& st, const Omegas& om, const TimeGrid& g) {
    CoupledSolution s;
    s.grid = g;
    s.m = st.m;
    s.L = Schedule(0, g.N + 1, st.m, st.m);
    s.PiInt = Schedule(0, g.N + 1, st.m, st.m);
    s.band.assign(static_cast<size_t>(g.N + 2) * (g.d + 1), Mat::Zero(st.m, st.m));

    for (int k = g.N + 1 - g.d; k >= 0; --k) {
        Mat Lk = l_step(st, s, k);
        s.asym_L = std::max(s.asym_L, asym(Lk));
        s.L[k] = sym(Lk);
        guard(s.L[k], k, "L");

        Mat D = diag_step(st, om, s, k);
        s.asym_Pi = std::max(s.asym_Pi, asym(D));
        s.pi(k + 1, k + 1) = sym(D);
        guard(s.pi(k + 1, k + 1), k + 1, "Pi");

        for (int i = 1; i <= std::min(g.d, g.N + 1 - k); ++i) {
            Mat P = band_step(st, s, k, i);
            s.asym_Pi = std::max(s.asym_Pi, asym(P));
            s.pi(k, k + i) = sym(P);
            guard(s.pi(k, k + i), k, "Pi");
        }
    }
    for (int k = 0; k <= g.N + 1; ++k) s.PiInt[k] = pi_integral(s, k);
    return s;
}

ResidualReport residual_check(const CoupledSolution& s, const StackedCoefficients& st, const Omegas& om) {
    const TimeGrid& g = s.grid;
    ResidualReport r;
    auto note = [&](double v, int k) {
        if (r.node < 0 || v > r.defect) {
            r.defect = v;
            r.node = k;
        }
    };
    for (int k = g.N + 1; k > g.N + 1 - g.d && k >= 0; --k) note(s.L[k].norm() / g.dt, k);
    for (int k = g.N + 1 - g.d; k >= 0; --k) {
        note((s.L[k] - sym(l_step(st, s, k))).norm() / g.dt, k);
        note((s.pi(k + 1, k + 1) - sym(diag_step(st, om, s, k))).norm(), k + 1);
        for (int i = 1; i <= std::min(g.d, g.N + 1 - k); ++i)
            note((s.pi(k, k + i) - sym(band_step(st, s, k, i))).norm() / g.dt, k);
    }
    for (int k = 0; k <= g.N + 1; ++k) note((s.PiInt[k] - pi_integral(s, k)).norm(), k);
    return r;
}

Mat pi_integral(const CoupledSolution& s, int k) {
    const TimeGrid& g = s.grid;
    if (k < 0 || k > g.N + 1) throw IndexOutOfRange("pi_integral node " + std::to_string(k));
    Mat out = Mat::Zero(s.m, s.m);
    for (int j = k + 1; j <= std::min(k + g.d, g.N + 1); ++j) out += s.pi(k, j);
    return g.dt * out;
}

}  // namespace stackdelay

// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/feedback_gains.hpp"

#include <algorithm>

#include "stackdelay/errors.hpp"

namespace stackdelay {

namespace {

Mat L_at(const CoupledSolution& s, int k) { return s.L.get_or_zero(k); }
Mat PiInt_at(const CoupledSolution& s, int k) { return s.PiInt.get_or_zero(k); }

}  // namespace

Schedule compute_leader_gain(const StackedCoefficients& st, const CoupledSolution& sol, const Omegas& om) {
    const TimeGrid& g = sol.grid;
    const int k2 = static_cast<int>(st.D.cols());
    Schedule K(0, g.N + 1, k2, st.m);
    for (int k = 0; k <= g.N + 1; ++k) {
        const int kd = k + g.d;
        const Mat& D = st.D[kd];
        K[k] = -om.O3inv[k] * (D.transpose() * L_at(sol, kd) - st.G2[kd].transpose() - D.transpose() * PiInt_at(sol, kd));
    }
    return K;
}

void compute_follower_gains(const ValidatedSpec& vs, const Schedule& P1, const StackedCoefficients& st,
                            const CoupledSolution& sol, const Omegas& om, GainSchedule& out) {
    const TimeGrid& g = sol.grid;
    const int n = vs.n(), k1 = vs.k1(), m = st.m;
    out.Ku1_now = Schedule(0, g.N + 1, k1, m);
    out.Ku1_pred = Schedule(0, g.N + 1, k1, m);
    for (int k = 0; k <= g.N + 1; ++k) {
        const int kd = k + g.d;
        const Mat Pd = kd <= g.N + 1 ? P1[kd] : Mat::Zero(n, n);
        const Mat& B1 = vs.B1bar[kd];
        const Mat& D1 = vs.D1bar[kd];
        const Mat L = L_at(sol, kd);
        const Mat PI = PiInt_at(sol, kd);
        const Mat& W1 = om.O1inv[k];
        const Mat& W3 = om.O3inv[k];

        Mat now = Mat::Zero(k1, m);
        now.rightCols(n) = D1.transpose() * Pd * vs.Cbar[kd];
        out.Ku1_now[k] = -W1 * now;

        Mat Bt = Mat::Zero(k1, m), Dt = Mat::Zero(k1, m);
        Bt.leftCols(n) = B1.transpose();
        Dt.leftCols(n) = D1.transpose();
        const Mat& D = st.D[kd];
        const Mat& C = st.C[kd];
        const Mat RL = resolvent(L, st.Cb[kd], kd) * L;
        const Mat S = st.Ab1[kd] + st.Ab2[kd] + C.transpose() * L;
        const Mat DPD = D1.transpose() * Pd * vs.D2bar[kd] * W3;
        Mat body = DPD * (D.transpose() * L - st.G2[kd].transpose()) - Bt * L - Dt * RL * S -
                   (DPD * D.transpose() - Bt - Dt * RL * C.transpose()) * PI;
        out.Ku1_pred[k] = W1 * body;
    }
}

GainSchedule compute_gains(const ValidatedSpec& vs, const Schedule& P1, const StackedCoefficients& st,
                           const CoupledSolution& sol, const Omegas& om) {
    GainSchedule gs;
    gs.Ku2 = compute_leader_gain(st, sol, om);
    compute_follower_gains(vs, P1, st, sol, om, gs);
    for (const Schedule* s : {&gs.Ku2, &gs.Ku1_now, &gs.Ku1_pred})
        for (int k = s->first(); k <= s->last(); ++k)
            if (!(*s)[k].allFinite()) throw NumericalBlowup("gain not finite", k);
    return gs;
}

Vec reconstruct_psi(const CoupledSolution& sol, const Vec& phi_k, const std::function<Vec(int)>& phihat_from,
                    int k) {
    const TimeGrid& g = sol.grid;
    if (k < g.d || k > g.N + 1) throw IndexOutOfRange("psi reconstruction needs delta <= t_k <= T");
    Vec acc = Vec::Zero(sol.m);
    for (int j = k + 1; j <= std::min(k + g.d, g.N + 1); ++j) acc += sol.pi(k, j) * phihat_from(j - g.d);
    return sol.L[k] * phi_k - g.dt * acc;
}

}  // namespace stackdelay

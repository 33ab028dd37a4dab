// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/stacked_system.hpp"

#include <cmath>
#include <sstream>

#include "stackdelay/errors.hpp"

namespace stackdelay {

namespace {

Mat blocks(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
    Mat m(a.rows() + c.rows(), a.cols() + b.cols());
    m << a, b, c, d;
    return m;
}

Mat vstack(const Mat& a, const Mat& b) {
    Mat m(a.rows() + b.rows(), a.cols());
    m << a, b;
    return m;
}

}  // namespace

HatCoefficients build_hats(const ValidatedSpec& vs, const Schedule& P1, const Schedule& Omega1) {
    const TimeGrid& g = vs.grid;
    const int n = vs.n(), k1 = vs.k1(), k2 = vs.k2();
    const int a = 0, b = g.last();
    HatCoefficients h;
    for (Schedule* s : {&h.A1, &h.A2, &h.A2t, &h.C1, &h.C2, &h.C2t, &h.F, &h.H, &h.K, &h.M})
        *s = Schedule(a, b, n, n);
    for (Schedule* s : {&h.B, &h.D, &h.N1, &h.N2}) *s = Schedule(a, b, n, k2);

    // Omega1^-1 at t - delta; zero when t < delta
    std::vector<Mat> Winv(static_cast<size_t>(g.N + 2));
    for (int k = 0; k <= g.N + 1; ++k) Winv[k] = checked_inverse(Omega1[k], "Omega1", k);
    auto W = [&](int k) -> Mat {
        int j = k - g.d;
        return j >= 0 && j <= g.N + 1 ? Winv[j] : Mat::Zero(k1, k1);
    };
    auto P = [&](int k) -> Mat { return k <= g.N + 1 ? P1[k] : Mat::Zero(n, n); };

    for (int k = a; k <= b; ++k) {
        const double ind = (k >= g.d && k <= g.N + 1) ? 1.0 : 0.0;
        const Mat Wk = W(k), Pk = P(k);
        const Mat& B1 = vs.B1bar[k];
        const Mat& D1 = vs.D1bar[k];
        const Mat& Cb = vs.Cbar[k];
        const Mat& D2 = vs.D2bar[k];
        const Mat D1P = D1.transpose() * Pk;
        h.A1[k] = vs.A[k];
        h.C1[k] = vs.C[k];
        h.A2t[k] = vs.Abar[k] - B1 * Wk * D1P * Cb;
        h.A2[k] = vs.Abar[k] - ind * B1 * Wk * D1P * Cb;
        h.B[k] = vs.B2bar[k] - ind * B1 * Wk * D1P * D2;
        h.C2t[k] = Cb - D1 * Wk * D1P * Cb;
        h.C2[k] = Cb - ind * D1 * Wk * D1P * Cb;
        h.D[k] = D2 - ind * D1 * Wk * D1P * D2;
        h.F[k] = -ind * B1 * Wk * B1.transpose();
        h.H[k] = -ind * B1 * Wk * D1.transpose();
        h.K[k] = -ind * D1 * Wk * B1.transpose();
        h.M[k] = -ind * D1 * Wk * D1.transpose();
        h.N2[k] = -Pk * vs.B2bar[k] - vs.C[k].transpose() * Pk * D2;
        if (k <= g.N + 1) {
            const int kd = k + g.d;
            const Mat Pd = P(kd);
            const Mat& D1d = vs.D1bar[kd];
            Mat inner = Mat::Identity(n, n) - D1d * Winv[k] * D1d.transpose() * Pd;
            h.N1[k] = -vs.Cbar[kd].transpose() * Pd * inner * vs.D2bar[kd];
        }
    }
    return h;
}

StackedCoefficients build_calligraphic(const ValidatedSpec& vs, const HatCoefficients& h,
                                       const Schedule& P2, const Omegas& om) {
    const TimeGrid& g = vs.grid;
    const int n = vs.n(), k2 = vs.k2(), m = 2 * n;
    const int a = 0, b = g.last();
    StackedCoefficients st;
    st.n = n;
    st.m = m;
    for (Schedule* s : {&st.A1, &st.A2, &st.A3, &st.B, &st.C, &st.Ab1, &st.Ab2, &st.Ab3, &st.Cb, &st.E})
        *s = Schedule(a, b, m, m);
    for (Schedule* s : {&st.D, &st.Db, &st.G1, &st.G2}) *s = Schedule(a, b, m, k2);
    st.Mv = Schedule(a, b, m, 1);
    st.Mbv = Schedule(a, b, m, 1);

    const Mat Z = Mat::Zero(n, n);
    const Mat Zk = Mat::Zero(n, k2);
    auto P = [&](int k) -> Mat { return k <= g.N + 1 ? P2[k] : Mat::Zero(n, n); };

    for (int k = a; k <= b; ++k) {
        const Mat Pk = P(k);
        const Mat Kt = h.K[k].transpose();
        const Mat Mt = h.M[k].transpose();
        st.A1[k] = blocks(h.A1[k], Z, Z, h.A1[k]);
        st.A2[k] = blocks(Z, h.F[k].transpose() * Pk + Kt * Pk * h.C1[k], Z, Z);
        st.A3[k] = blocks(h.A2t[k], Kt * Pk * h.C2[k], Z, h.A2[k]);
        st.B[k] = blocks(Kt * Pk * h.K[k], h.F[k].transpose(), h.F[k], Z);
        st.C[k] = blocks(Kt * Pk * h.M[k], Kt, h.H[k], Z);
        st.Ab1[k] = blocks(h.C1[k], Z, Z, h.C1[k]);
        st.Ab2[k] = blocks(Z, h.H[k].transpose() * Pk + Mt * Pk * h.C1[k], Z, Z);
        st.Ab3[k] = blocks(h.C2t[k], Mt * Pk * h.C2[k], Z, h.C2[k]);
        st.Cb[k] = blocks(Mt * Pk * h.M[k], Mt, h.M[k], Z);
        st.D[k] = vstack(Kt * Pk * h.D[k], h.B[k]);
        st.Db[k] = vstack(Mt * Pk * h.D[k], h.D[k]);
        st.G2[k] = vstack(h.N2[k], Zk);
        if (k <= g.N + 1) {
            const int kd = k + g.d;
            const Mat Pd = P(kd);
            const Mat X = h.C2[kd].transpose() * Pd * h.D[kd];
            st.G1[k] = vstack(h.N1[k], -X);
            st.E[k] = blocks(Z, Z, Z, -X * om.O2inv[k] * X.transpose());
        }
        if (k < g.d) {
            const Mat e = vs.eta1[k - g.d];
            st.Mv[k] = vstack(Kt * Pk * vs.D1bar[k] * e, vs.B1bar[k] * e);
            st.Mbv[k] = vstack(Mt * Pk * vs.D1bar[k] * e, vs.D1bar[k] * e);
        }
    }
    return st;
}

Mat resolvent(const Mat& L, const Mat& Cb, int node, double* rcond_out) {
    const Mat M = Mat::Identity(L.rows(), L.cols()) - L * Cb;
    Eigen::PartialPivLU<Mat> lu(M);
    Mat inv = lu.inverse();
    double rc = 0.0;
    if (inv.allFinite()) {
        double nm = M.cwiseAbs().colwise().sum().maxCoeff();
        double ni = inv.cwiseAbs().colwise().sum().maxCoeff();
        rc = 1.0 / (nm * ni);
    }
    if (rcond_out) *rcond_out = rc;
    if (!(rc >= kResolventRcond)) {
        std::ostringstream os;
        os << "I - L Cb is singular at node " << node << " (rcond " << rc << ")";
        throw SingularResolvent(os.str(), node, rc);
    }
    return inv;
}

XiTriple build_xi(const StackedCoefficients& st, const Mat& L, const Mat& W, int node) {
    const Mat& A2 = st.A2[node];
    const Mat& B = st.B[node];
    const Mat& C = st.C[node];
    const Mat& D = st.D[node];
    const Mat& G2 = st.G2[node];
    const Mat& Ab1 = st.Ab1[node];
    const Mat Rinv = resolvent(L, st.Cb[node], node);
    const Mat S = Ab1 + st.Ab2[node] + C.transpose() * L;
    const Mat RL = Rinv * L;
    const Mat Gm = G2.transpose() - D.transpose() * L;  // k2 x m
    XiTriple x;
    x.Xi1 = A2 + B * L + C * RL * S + D * W * Gm;
    x.Xi2 = -B - C * RL * C.transpose() + D * W * D.transpose();
    x.Xi3 = Gm.transpose() * W * Gm - S.transpose() * RL * S - A2.transpose() * L - L * A2 - L * B * L +
            Ab1.transpose() * L * Ab1;
    return x;
}

}  // namespace stackdelay

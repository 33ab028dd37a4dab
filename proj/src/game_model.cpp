// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stackdelay/errors.hpp"

namespace stackdelay {

CoeffFn CoeffFn::zero(int r, int c) {
    CoeffFn z;
    z.rows = r;
    z.cols = c;
    Mat m = Mat::Zero(r, c);
    z.f = [m](double) { return m; };
    return z;
}

CoeffFn CoeffFn::constant(const Mat& m) {
    CoeffFn z;
    z.rows = static_cast<int>(m.rows());
    z.cols = static_cast<int>(m.cols());
    z.f = [m](double) { return m; };
    return z;
}

CoeffFn CoeffFn::table(std::vector<std::pair<double, Mat>> rows) {
    if (rows.empty()) throw ConfigError("BadTable", "empty coefficient table");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    CoeffFn z;
    z.rows = static_cast<int>(rows.front().second.rows());
    z.cols = static_cast<int>(rows.front().second.cols());
    for (const auto& r : rows)
        if (r.second.rows() != z.rows || r.second.cols() != z.cols)
            throw DimensionMismatch("table rows have inconsistent shapes");
    z.f = [rows](double t) {
        // node times carry round-off, hence the slack
        size_t i = 0;
        for (size_t j = 0; j < rows.size(); ++j)
            if (rows[j].first <= t + 1e-9) i = j;
        return rows[i].second;
    };
    return z;
}

namespace {

void expect_shape(const CoeffFn& c, int r, int k, const char* name) {
    if (c.rows != r || c.cols != k) {
        std::ostringstream os;
        os << name << " is " << c.rows << "x" << c.cols << ", expected " << r << "x" << k;
        throw DimensionMismatch(os.str());
    }
    if (c.beyond && (c.beyond->rows() != r || c.beyond->cols() != k))
        throw DimensionMismatch(std::string(name) + " beyond_horizon value has wrong shape");
}

void check_sym(const Mat& m, const char* name, int node) {
    if (m.rows() != m.cols() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        std::ostringstream os;
        os << name << " not symmetric at node " << node;
        throw NonSymmetricWeight(os.str());
    }
}

Schedule sample(const CoeffFn& c, const TimeGrid& g, const char* name, bool weight, bool symmetric,
                int first, int last) {
    Schedule s(first, last, c.rows, c.cols);
    for (int k = first; k <= last; ++k) {
        Mat m;
        if (weight && k >= g.horizon_node())
            m = c.beyond ? *c.beyond : Mat::Zero(c.rows, c.cols);
        else
            m = c(g.t(k));
        if (m.rows() != c.rows || m.cols() != c.cols)
            throw DimensionMismatch(std::string(name) + " sample has wrong shape");
        if (!m.allFinite()) throw ConfigError("NonFinite", std::string(name) + " is not finite");
        if (symmetric) check_sym(m, name, k);
        s[k] = m;
    }
    return s;
}

}  // namespace

ValidatedSpec validate_spec(const GameSpec& spec, const TimeGrid& grid) {
    if (spec.n < 1 || spec.k1 < 1 || spec.k2 < 1) throw DimensionMismatch("dimensions must be positive");
    if (!(spec.T > 0.0) || !(spec.delta > 0.0)) throw DimensionMismatch("horizon and delay must be positive");
    if (spec.delta > spec.T) throw DelayExceedsHorizon("delay exceeds horizon");
    if (std::fabs(grid.T - spec.T) > 1e-12 * spec.T || std::fabs(grid.delta - spec.delta) > 1e-12 * spec.T)
        throw GridMismatch("grid built for a different horizon or delay");
    if (std::fabs(grid.d * grid.dt - spec.delta) > 1e-9 * spec.delta)
        throw DelayNotDivisible("delay is not a multiple of the step");
    if (grid.d > grid.N + 1) throw DelayExceedsHorizon("lag exceeds grid");

    const int n = spec.n, k1 = spec.k1, k2 = spec.k2;
    expect_shape(spec.A, n, n, "A");
    expect_shape(spec.Abar, n, n, "Abar");
    expect_shape(spec.C, n, n, "C");
    expect_shape(spec.Cbar, n, n, "Cbar");
    expect_shape(spec.B1bar, n, k1, "B1bar");
    expect_shape(spec.D1bar, n, k1, "D1bar");
    expect_shape(spec.B2bar, n, k2, "B2bar");
    expect_shape(spec.D2bar, n, k2, "D2bar");
    expect_shape(spec.Q1, n, n, "Q1");
    expect_shape(spec.Q1bar, n, n, "Q1bar");
    expect_shape(spec.Q2, n, n, "Q2");
    expect_shape(spec.Q2bar, n, n, "Q2bar");
    expect_shape(spec.R1, k1, k1, "R1");
    expect_shape(spec.R1bar, k1, k1, "R1bar");
    expect_shape(spec.R2, k2, k2, "R2");
    expect_shape(spec.R2bar, k2, k2, "R2bar");
    expect_shape(spec.phi, n, 1, "phi");
    expect_shape(spec.eta1, k1, 1, "eta1");
    expect_shape(spec.eta2, k2, 1, "eta2");
    if (spec.G1.rows() != n || spec.G1.cols() != n) throw DimensionMismatch("G1 shape");
    if (spec.G2.rows() != n || spec.G2.cols() != n) throw DimensionMismatch("G2 shape");
    check_sym(spec.G1, "G1", grid.N + 1);
    check_sym(spec.G2, "G2", grid.N + 1);

    ValidatedSpec vs;
    vs.spec = spec;
    vs.grid = grid;
    const int a = grid.first(), b = grid.last();
    vs.A = sample(spec.A, grid, "A", false, false, a, b);
    vs.Abar = sample(spec.Abar, grid, "Abar", false, false, a, b);
    vs.C = sample(spec.C, grid, "C", false, false, a, b);
    vs.Cbar = sample(spec.Cbar, grid, "Cbar", false, false, a, b);
    vs.B1bar = sample(spec.B1bar, grid, "B1bar", false, false, a, b);
    vs.D1bar = sample(spec.D1bar, grid, "D1bar", false, false, a, b);
    vs.B2bar = sample(spec.B2bar, grid, "B2bar", false, false, a, b);
    vs.D2bar = sample(spec.D2bar, grid, "D2bar", false, false, a, b);
    vs.Q1 = sample(spec.Q1, grid, "Q1", false, true, a, b);
    vs.Q1bar = sample(spec.Q1bar, grid, "Q1bar", true, true, a, b);
    vs.Q2 = sample(spec.Q2, grid, "Q2", false, true, a, b);
    vs.Q2bar = sample(spec.Q2bar, grid, "Q2bar", true, true, a, b);
    vs.R1 = sample(spec.R1, grid, "R1", false, true, a, b);
    vs.R1bar = sample(spec.R1bar, grid, "R1bar", true, true, a, b);
    vs.R2 = sample(spec.R2, grid, "R2", false, true, a, b);
    vs.R2bar = sample(spec.R2bar, grid, "R2bar", true, true, a, b);
    vs.G1 = spec.G1;
    vs.G2 = spec.G2;
    vs.phi = sample(spec.phi, grid, "phi", false, false, a, 0);
    vs.eta1 = sample(spec.eta1, grid, "eta1", false, false, a, 0);
    vs.eta2 = sample(spec.eta2, grid, "eta2", false, false, a, 0);
    return vs;
}

ValidatedSpec validate_spec(const ValidatedSpec& vs) { return validate_spec(vs.spec, vs.grid); }

std::string AssumptionReport::summary() const {
    std::ostringstream os;
    os.precision(6);
    os << name << ": " << (pass ? "pass" : "FAIL") << " (tol " << tol << ")";
    for (size_t i = 0; i < residuals.size(); ++i) {
        os << "\n  " << labels[i] << " = " << residuals[i];
        if (worst_node[i] >= 0) os << " at node " << worst_node[i];
    }
    if (!note.empty()) os << "\n  " << note;
    return os.str();
}

double default_tolerance(const Schedule& P) { return 1e-9 * (1.0 + P.max_norm()); }

namespace {

struct Residual {
    double v = 0.0;
    int node = -1;
    void add(double r, int k) {
        if (node < 0 || r > v) {
            v = r;
            node = k;
        }
    }
};

void finish(AssumptionReport& rep, const std::vector<std::string>& labels, const std::vector<Residual>& rs) {
    for (size_t i = 0; i < rs.size(); ++i) {
        rep.labels.push_back(labels[i]);
        rep.residuals.push_back(rs[i].v);
        rep.worst_node.push_back(rs[i].node);
        if (!(rs[i].v <= rep.tol)) rep.pass = false;
    }
}

}  // namespace

AssumptionReport check_A1(const ValidatedSpec& vs, const Schedule& P1, double tol) {
    AssumptionReport rep;
    rep.name = "A1";
    rep.tol = tol >= 0.0 ? tol : default_tolerance(P1);
    std::vector<Residual> r(2);
    for (int k = 0; k <= vs.grid.N + 1; ++k) {
        const Mat& P = P1[k];
        r[0].add((vs.C[k].transpose() * P * vs.D1bar[k] + P * vs.B1bar[k]).norm(), k);
        r[1].add((vs.C[k].transpose() * P * vs.Cbar[k] + P * vs.Abar[k]).norm(), k);
    }
    finish(rep, {"|C'P1 D1bar + P1 B1bar|", "|C'P1 Cbar + P1 Abar|"}, r);
    return rep;
}

AssumptionReport check_A2(const ValidatedSpec& vs, const Schedule& P2, double tol) {
    AssumptionReport rep;
    rep.name = "A2";
    rep.tol = tol >= 0.0 ? tol : default_tolerance(P2);
    std::vector<Residual> r(3);
    for (int k = 0; k <= vs.grid.N + 1; ++k) {
        const Mat& P = P2[k];
        r[0].add((vs.C[k].transpose() * P * vs.D1bar[k] + P * vs.B1bar[k]).norm(), k);
        r[1].add((vs.C[k].transpose() * P * vs.Cbar[k] + P * vs.Abar[k]).norm(), k);
        r[2].add((vs.C[k].transpose() * P * vs.D2bar[k] + P * vs.B2bar[k]).norm(), k);
    }
    finish(rep, {"|C'P2 D1bar + P2 B1bar|", "|C'P2 Cbar + P2 Abar|", "|C'P2 D2bar + P2 B2bar|"}, r);
    return rep;
}

AssumptionReport check_A3(const ValidatedSpec& vs, const Schedule& P1, const Schedule& Omega1, double tol) {
    AssumptionReport rep;
    rep.name = "A3";
    rep.tol = tol >= 0.0 ? tol : default_tolerance(P1);
    const int n = vs.n(), d = vs.grid.d;
    std::vector<Residual> r(2);
    for (int k = d; k <= vs.grid.N; ++k) {
        Mat Wi = Omega1[k - d].inverse();
        Mat G = vs.D1bar[k] * Wi * vs.D1bar[k].transpose() * P1[k];
        r[0].add((Mat::Identity(n, n) - G).norm(), k);
        r[1].add((vs.Abar[k] - vs.B1bar[k] * Wi * vs.D1bar[k].transpose() * P1[k] * vs.Cbar[k]).norm(), k);
    }
    finish(rep, {"|I - D1bar Om1^-1(t-delta) D1bar'P1|", "|Abar - B1bar Om1^-1(t-delta) D1bar'P1 Cbar|"}, r);
    rep.note = "checked on delta <= t < T";
    return rep;
}

AssumptionReport check_one_dim_conditions(const ValidatedSpec& vs) {
    if (vs.n() != 1 || vs.k1() != 1 || vs.k2() != 1)
        throw NotOneDimensional("scalar conditions need n = k1 = k2 = 1");
    const auto& s = vs.spec;
    const TimeGrid& g = vs.grid;
    AssumptionReport rep;
    rep.name = "one-dimensional conditions";
    rep.tol = 1e-12;

    // P2 vanishes identically iff G2 = 0 and Q2(t)+Q2bar(t+delta) = 0
    bool p2_zero = std::fabs(s.G2(0, 0)) <= rep.tol;
    for (int k = 0; k <= g.N + 1 && p2_zero; ++k)
        if (std::fabs(vs.Q2[k](0, 0) + vs.Q2bar[k + g.d](0, 0)) > rep.tol) p2_zero = false;

    std::vector<Residual> r(6);
    double min_pos = 1e300, min_d1 = 1e300;
    for (int k = 0; k <= g.N + 1; ++k) {
        double t = g.t(k);
        double C = s.C(t)(0, 0);
        r[0].add(std::fabs(s.B1bar(t)(0, 0) + C * s.D1bar(t)(0, 0)), k);
        r[1].add(std::fabs(s.Abar(t)(0, 0) + C * s.Cbar(t)(0, 0)), k);
        r[5].add(p2_zero ? 0.0 : std::fabs(s.B2bar(t)(0, 0) + C * s.D2bar(t)(0, 0)), k);
        if (k >= g.d) {
            double tl = g.t(k - g.d);
            min_d1 = std::min(min_d1, std::fabs(s.D1bar(t)(0, 0)));
            r[3].add(std::fabs(s.R1bar(t)(0, 0) + s.R1(tl)(0, 0)), k);
            min_pos = std::min(min_pos, s.R2(tl)(0, 0) + s.R2bar(t)(0, 0));
        }
    }
    r[2].v = min_d1 > 0.0 ? 0.0 : 1.0;
    r[4].v = min_pos > 0.0 ? 0.0 : 1.0 - min_pos;
    finish(rep,
           {"|B1bar + C D1bar|", "|Abar + C Cbar|", "D1bar = 0 somewhere on [delta,T]",
            "|R1bar(t) + R1(t-delta)|", "positivity defect of R2(t-delta)+R2bar(t)",
            "|B2bar + C D2bar| (needed when P2 != 0)"},
           r);
    rep.note = p2_zero ? "case 2 (P2 = 0)" : "case 1 (P2 != 0)";
    return rep;
}

}  // namespace stackdelay

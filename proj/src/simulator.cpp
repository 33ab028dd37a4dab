// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cfloat>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "stackdelay/errors.hpp"
#include "stackdelay/pipeline.hpp"

namespace stackdelay {

namespace {

constexpr double kRoundoffUlps = 4.0;

// y += s * M x, M row-major r x c
inline void mv(const double* M, int r, int c, const double* x, double* y, double s = 1.0) {
    for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        const double* row = M + i * c;
        for (int j = 0; j < c; ++j) acc += row[j] * x[j];
        y[i] += s * acc;
    }
}

inline double quad(const double* M, int n, const double* x) {
    double q = 0.0;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += M[i * n + j] * x[j];
        q += x[i] * acc;
    }
    return q;
}

inline bool finite_small(const double* x, int n) {
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(x[i]) || std::fabs(x[i]) > kBlowup) return false;
    return true;
}

void put(Dense& D, int k, const Mat& M) {
    double* p = D.at(k);
    for (int i = 0; i < D.rows; ++i)
        for (int j = 0; j < D.cols; ++j) p[i * D.cols + j] = M(i, j);
}

Dense make_dense(int first, int last, int r, int c) {
    Dense D;
    D.rows = r;
    D.cols = c;
    D.first = first;
    D.count = last - first + 1;
    D.v.assign(static_cast<size_t>(D.count) * r * c, 0.0);
    return D;
}

// blocks of paths reduced in a fixed order, whatever the worker count
constexpr std::size_t kBlock = 64;

template <class F>
void for_blocks(std::size_t paths, int workers, F&& body) {
    const std::size_t nblocks = (paths + kBlock - 1) / kBlock;
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto run = [&] {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            try {
                body(b, b * kBlock, std::min(paths, (b + 1) * kBlock));
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
                next = nblocks;
                return;
            }
        }
    };
    const int w = std::max(1, std::min<int>(workers, static_cast<int>(nblocks)));
    if (w == 1) {
        run();
    } else {
        std::vector<std::thread> ts;
        for (int i = 0; i < w; ++i) ts.emplace_back(run);
        for (auto& t : ts) t.join();
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace

Dense flatten(const Schedule& s, int first, int last) {
    Dense D = make_dense(first, last, s.rows(), s.cols());
    for (int k = first; k <= last; ++k) put(D, k, s.get_or_zero(k));
    return D;
}

Dense flatten(const Schedule& s) { return flatten(s, s.first(), s.last()); }

SimTables build_sim_tables(const PipelineResult& r) {
    const ValidatedSpec& vs = r.vs;
    const TimeGrid& g = vs.grid;
    const StackedCoefficients& st = r.st;
    const CoupledSolution& sol = r.sol;
    SimTables tb;
    tb.g = g;
    tb.n = vs.n();
    tb.m = st.m;
    tb.k1 = vs.k1();
    tb.k2 = vs.k2();
    const int n = tb.n, m = tb.m, top = g.last(), d = g.d;

    tb.A1 = flatten(st.A1);
    tb.A3 = flatten(st.A3);
    tb.D = flatten(st.D);
    tb.Mv = flatten(st.Mv);
    tb.Ab1 = flatten(st.Ab1);
    tb.Ab3 = flatten(st.Ab3);
    tb.Db = flatten(st.Db);
    tb.Mbv = flatten(st.Mbv);
    tb.Gp = make_dense(0, top, m, m);
    tb.Hp = make_dense(0, top, m, m);
    for (int k = 0; k <= top; ++k) {
        const Mat& B = st.B[k];
        const Mat& C = st.C[k];
        const Mat& Cb = st.Cb[k];
        if (k < d && (B.norm() != 0.0 || C.norm() != 0.0 || Cb.norm() != 0.0))
            throw Error("InvariantViolation", "costate blocks nonzero before delta", k);
        const Mat L = sol.L.get_or_zero(k);
        const Mat PI = sol.PiInt.get_or_zero(k);
        const Mat S = st.Ab1[k] + st.Ab2[k] + C.transpose() * L;
        const Mat Epsibar = resolvent(L, Cb, k) * L * (S - C.transpose() * PI);
        put(tb.Gp, k, st.A2[k] + B * (L - PI) + C * Epsibar);
        put(tb.Hp, k, st.Ab2[k] + C.transpose() * (L - PI) + Cb * Epsibar);
    }
    tb.Phi = make_dense(0, g.N, m, m);
    const Mat I = Mat::Identity(m, m);
    for (int k = 0; k <= g.N; ++k) {
        Mat P = I;
        for (int q = k + 1; q <= k + d; ++q) P = (I + g.dt * st.A1[q]) * P;
        put(tb.Phi, k, P);
    }

    tb.Ku2 = flatten(r.gains.Ku2);
    tb.Ku1n = flatten(r.gains.Ku1_now);
    tb.Ku1p = flatten(r.gains.Ku1_pred);

    const int hz = g.N + 1;
    tb.A = flatten(vs.A, 0, hz);
    tb.Abar = flatten(vs.Abar, 0, hz);
    tb.B1 = flatten(vs.B1bar, 0, hz);
    tb.B2 = flatten(vs.B2bar, 0, hz);
    tb.C = flatten(vs.C, 0, hz);
    tb.Cbar = flatten(vs.Cbar, 0, hz);
    tb.D1 = flatten(vs.D1bar, 0, hz);
    tb.D2 = flatten(vs.D2bar, 0, hz);
    tb.Q1 = flatten(vs.Q1, 0, g.N);
    tb.Q1bar = flatten(vs.Q1bar, 0, g.N + d);
    tb.Q2 = flatten(vs.Q2, 0, g.N);
    tb.Q2bar = flatten(vs.Q2bar, 0, g.N + d);
    tb.R1 = flatten(vs.R1, 0, g.N);
    tb.R1bar = flatten(vs.R1bar, 0, g.N + d);
    tb.R2 = flatten(vs.R2, 0, g.N);
    tb.R2bar = flatten(vs.R2bar, 0, g.N + d);
    tb.G1 = vs.G1;
    tb.G2 = vs.G2;

    tb.Kx = make_dense(0, hz, tb.k1, n);
    tb.Wb = make_dense(0, hz, tb.k1, n);
    tb.Wd = make_dense(0, hz, tb.k1, tb.k2);
    for (int k = 0; k <= hz; ++k) {
        const int kd = k + d;
        const Mat Pd = kd <= hz ? r.P1[kd] : Mat::Zero(n, n);
        const Mat& W1 = r.om.O1inv[k];
        put(tb.Kx, k, W1 * vs.D1bar[kd].transpose() * Pd * vs.Cbar[kd]);
        put(tb.Wb, k, W1 * vs.B1bar[kd].transpose());
        put(tb.Wd, k, W1 * vs.D1bar[kd].transpose() * Pd * vs.D2bar[kd]);
    }
    tb.AtT = make_dense(0, top, n, n);
    for (int k = 0; k <= top; ++k) put(tb.AtT, k, r.hats.A2t[k].transpose());
    tb.A1T = make_dense(0, hz, n, n);
    for (int k = 0; k <= hz; ++k) put(tb.A1T, k, r.hats.A1[k].transpose());
    tb.N1 = flatten(r.hats.N1, 0, hz);
    tb.N2 = flatten(r.hats.N2, 0, hz);

    for (int k = -d; k <= 0; ++k) {
        Vec v = Vec::Zero(m);
        v.tail(n) = vs.phi[k];
        tb.phi_hist.push_back(v);
    }
    for (int k = -d; k < 0; ++k) {
        tb.eta1.push_back(vs.eta1[k]);
        tb.eta2.push_back(vs.eta2[k]);
    }

    // before delta the conditional mean given F_0 is deterministic
    tb.fan0.push_back(tb.phi_hist.back());
    const double one = 1.0;
    for (int q = 0; q < d; ++q) {
        const Vec& p = tb.fan0.back();
        Vec acc = Vec::Zero(m);
        mv(tb.A1.at(q), m, m, p.data(), acc.data());
        mv(tb.Gp.at(q), m, m, p.data(), acc.data());
        mv(tb.A3.at(q), m, m, tb.phi_hist[static_cast<size_t>(q)].data(), acc.data());
        mv(tb.D.at(q), m, tb.k2, tb.eta2[static_cast<size_t>(q)].data(), acc.data());
        mv(tb.Mv.at(q), m, 1, &one, acc.data());
        tb.fan0.push_back(p + g.dt * acc);
    }
    return tb;
}

std::vector<double> SimulatedPath::state() const {
    const int n = m / 2;
    std::vector<double> X(static_cast<size_t>(N + 2 + d) * n);
    for (int row = 0; row < N + 2 + d; ++row)
        for (int i = 0; i < n; ++i) X[row * n + i] = phi[row * m + n + i];
    return X;
}

std::vector<double> brownian_increments(const TimeGrid& g, std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    std::mt19937_64 gen(seq);
    std::normal_distribution<double> nd(0.0, std::sqrt(g.dt));
    std::vector<double> dW(static_cast<size_t>(g.N + 1));
    for (auto& w : dW) w = nd(gen);
    return dW;
}

SimulatedPath simulate_path(const SimTables& tb, const std::vector<double>& dW, const std::vector<double>* u2_override) {
    const TimeGrid& g = tb.g;
    const int d = g.d, N = g.N, m = tb.m, k1 = tb.k1, k2 = tb.k2;
    const double dt = g.dt;
    SimulatedPath P;
    P.d = d;
    P.N = N;
    P.m = m;
    P.k1 = k1;
    P.k2 = k2;
    const size_t rows = static_cast<size_t>(N + 2 + d);
    P.phi.assign(rows * m, 0.0);
    P.pred.assign(rows * m, 0.0);
    P.u1.assign(rows * k1, 0.0);
    P.u2.assign(rows * k2, 0.0);
    P.dW = dW;
    if (static_cast<int>(dW.size()) != N + 1) throw GridMismatch("Brownian increments do not match the grid");
    if (u2_override && static_cast<int>(u2_override->size()) != (N + 2) * k2)
        throw GridMismatch("leader control override does not match the grid");

    for (int k = -d; k <= 0; ++k)
        std::copy(tb.phi_hist[k + d].data(), tb.phi_hist[k + d].data() + m, &P.phi[(k + d) * m]);
    for (int k = -d; k < 0; ++k) {
        std::copy(tb.eta1[k + d].data(), tb.eta1[k + d].data() + k1, &P.u1[(k + d) * k1]);
        std::copy(tb.eta2[k + d].data(), tb.eta2[k + d].data() + k2, &P.u2[(k + d) * k2]);
    }
    for (int r = 0; r <= d; ++r) std::copy(tb.fan0[r].data(), tb.fan0[r].data() + m, &P.pred[r * m]);

    std::vector<double> gk(m), diff(m), gd(m);
    const double one = 1.0;
    for (int k = 0; k <= N + 1; ++k) {
        double* phik = &P.phi[(k + d) * m];
        const double* pkd = &P.pred[(k + d) * m];
        double* u2k = &P.u2[(k + d) * k2];
        double* u1k = &P.u1[(k + d) * k1];
        if (u2_override) {
            std::copy(&(*u2_override)[k * k2], &(*u2_override)[k * k2] + k2, u2k);
        } else {
            mv(tb.Ku2.at(k), k2, m, pkd, u2k);
        }
        mv(tb.Ku1n.at(k), k1, m, phik, u1k);
        mv(tb.Ku1p.at(k), k1, m, pkd, u1k);
        if (k == N + 1) break;

        const double* pk = &P.pred[k * m];
        const double* phil = &P.phi[k * m];  // phi(k-d)
        const double* u2l = &P.u2[k * k2];   // u2(k-d)
        std::fill(gk.begin(), gk.end(), 0.0);
        mv(tb.Gp.at(k), m, m, pk, gk.data());
        mv(tb.A3.at(k), m, m, phil, gk.data());
        mv(tb.D.at(k), m, k2, u2l, gk.data());
        mv(tb.Mv.at(k), m, 1, &one, gk.data());
        std::fill(diff.begin(), diff.end(), 0.0);
        mv(tb.Ab1.at(k), m, m, phik, diff.data());
        mv(tb.Hp.at(k), m, m, pk, diff.data());
        mv(tb.Ab3.at(k), m, m, phil, diff.data());
        mv(tb.Db.at(k), m, k2, u2l, diff.data());
        mv(tb.Mbv.at(k), m, 1, &one, diff.data());

        double* next = &P.phi[(k + 1 + d) * m];
        for (int i = 0; i < m; ++i) next[i] = phik[i] + dt * gk[i] + diff[i] * dW[k];
        mv(tb.A1.at(k), m, m, phik, next, dt);

        const int r = k + d;
        std::fill(gd.begin(), gd.end(), 0.0);
        mv(tb.Gp.at(r), m, m, pkd, gd.data());
        mv(tb.A3.at(r), m, m, phik, gd.data());
        mv(tb.D.at(r), m, k2, u2k, gd.data());
        mv(tb.Mv.at(r), m, 1, &one, gd.data());
        double* pn = &P.pred[(r + 1) * m];
        for (int i = 0; i < m; ++i) pn[i] = pkd[i] + dt * gd[i];
        mv(tb.A1.at(r), m, m, pkd, pn, dt);
        for (int i = 0; i < m; ++i) diff[i] *= dW[k];
        mv(tb.Phi.at(k), m, m, diff.data(), pn);

        if (!finite_small(next, m) || !finite_small(pn, m)) throw NumericalBlowup("path diverged", k + 1);
    }
    return P;
}

SimulatedPath simulate_path(const SimTables& tb, std::uint64_t seed, std::uint64_t path) {
    SimulatedPath P = simulate_path(tb, brownian_increments(tb.g, seed, path));
    evaluate_path_costs(tb, P);
    return P;
}

std::vector<Vec> predict_phi(const SimTables& tb, const SimulatedPath& P, int k) {
    const TimeGrid& g = tb.g;
    const int d = g.d, m = tb.m, k2 = tb.k2;
    if (k < 0 || k > g.N + 1) throw IndexOutOfRange("predictor base node " + std::to_string(k));
    std::vector<Vec> fan;
    fan.push_back(P.phi_at(k));
    const double one = 1.0;
    for (int i = 0; i < d; ++i) {
        const int r = k + i;
        const Vec& cur = fan.back();
        Vec acc = Vec::Zero(m);
        mv(tb.A1.at(r), m, m, cur.data(), acc.data());
        mv(tb.Gp.at(r), m, m, &P.pred[r * m], acc.data());
        mv(tb.A3.at(r), m, m, &P.phi[r * m], acc.data());
        mv(tb.D.at(r), m, k2, &P.u2[r * k2], acc.data());
        mv(tb.Mv.at(r), m, 1, &one, acc.data());
        fan.push_back(cur + g.dt * acc);
    }
    return fan;
}

double path_cost(const SimTables& tb, int which, const std::vector<double>& X, const std::vector<double>& u,
                 double* abs_scale) {
    const TimeGrid& g = tb.g;
    const int d = g.d, n = tb.n, k = which == 1 ? tb.k1 : tb.k2;
    const Dense& Q = which == 1 ? tb.Q1 : tb.Q2;
    const Dense& Qb = which == 1 ? tb.Q1bar : tb.Q2bar;
    const Dense& R = which == 1 ? tb.R1 : tb.R2;
    const Dense& Rb = which == 1 ? tb.R1bar : tb.R2bar;
    const Mat& G = which == 1 ? tb.G1 : tb.G2;
    double run = 0.0;
    double mag = 0.0;
    auto add = [&](double v) {
        run += v;
        mag += std::fabs(v);
    };
    for (int j = 0; j <= g.N; ++j) {
        add(quad(Q.at(j), n, &X[(j + d) * n]));
        add(quad(R.at(j), k, &u[(j + d) * k]));
    }
    // delayed terms run on to T + delta, where the weights take their beyond-horizon value
    for (int j = 0; j <= g.N + d; ++j) {
        add(quad(Qb.at(j), n, &X[j * n]));
        add(quad(Rb.at(j), k, &u[j * k]));
    }
    Eigen::Map<const Vec> XT(&X[(g.N + 1 + d) * n], n);
    const double term = XT.dot(G * XT);
    if (abs_scale) *abs_scale = g.dt * mag + std::fabs(term);
    return g.dt * run + term;
}

void evaluate_path_costs(const SimTables& tb, SimulatedPath& P) {
    const std::vector<double> X = P.state();
    P.J1 = path_cost(tb, 1, X, P.u1);
    P.J2 = path_cost(tb, 2, X, P.u2);
}

std::vector<double> simulate_state(const SimTables& tb, const std::vector<double>& dW, std::vector<double>& u1,
                                   const std::vector<double>& u2, const FollowerReaction* react) {
    const TimeGrid& g = tb.g;
    const int d = g.d, n = tb.n, k1 = tb.k1, k2 = tb.k2;
    std::vector<double> X(static_cast<size_t>(g.N + 2 + d) * n, 0.0);
    for (int k = -d; k <= 0; ++k)
        for (int i = 0; i < n; ++i) X[(k + d) * n + i] = tb.phi_hist[k + d][n + i];
    std::vector<double> drift(n), vol(n), dx(n);
    for (int k = 0; k <= g.N + 1; ++k) {
        const double* x = &X[(k + d) * n];
        if (react) {
            double* u = &u1[(k + d) * k1];
            const double* ub = &(*react->u1bar)[(k + d) * k1];
            const double* xb = &(*react->Xbar)[(k + d) * n];
            const double* w = &(*react->w)[k * k1];
            for (int i = 0; i < n; ++i) dx[i] = x[i] - xb[i];
            for (int i = 0; i < k1; ++i) u[i] = ub[i] - w[i];
            mv(tb.Kx.at(k), k1, n, dx.data(), u, -1.0);
        }
        if (k == g.N + 1) break;
        const double* xl = &X[k * n];
        const double* u1l = &u1[k * k1];
        const double* u2l = &u2[k * k2];
        std::fill(drift.begin(), drift.end(), 0.0);
        std::fill(vol.begin(), vol.end(), 0.0);
        mv(tb.A.at(k), n, n, x, drift.data());
        mv(tb.Abar.at(k), n, n, xl, drift.data());
        mv(tb.B1.at(k), n, k1, u1l, drift.data());
        mv(tb.B2.at(k), n, k2, u2l, drift.data());
        mv(tb.C.at(k), n, n, x, vol.data());
        mv(tb.Cbar.at(k), n, n, xl, vol.data());
        mv(tb.D1.at(k), n, k1, u1l, vol.data());
        mv(tb.D2.at(k), n, k2, u2l, vol.data());
        double* xn = &X[(k + 1 + d) * n];
        for (int i = 0; i < n; ++i) xn[i] = x[i] + g.dt * drift[i] + vol[i] * dW[k];
        if (!finite_small(xn, n)) throw NumericalBlowup("state diverged", k + 1);
    }
    return X;
}

std::vector<int> checkpoint_nodes(const TimeGrid& g, int count) {
    std::vector<int> out;
    if (count <= 0) return out;
    const int lo = g.d, hi = g.N + 1;
    for (int i = 0; i < count; ++i) {
        int k = count == 1 ? hi : lo + static_cast<int>(std::llround(static_cast<double>(hi - lo) * i / (count - 1)));
        if (out.empty() || k != out.back()) out.push_back(k);
    }
    return out;
}

void mean_se(const std::vector<double>& x, double& mean, double& se) {
    const double M = static_cast<double>(x.size());
    mean = 0.0;
    se = 0.0;
    if (x.empty()) return;
    for (double v : x) mean += v;
    mean /= M;
    if (x.size() < 2) return;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / (M - 1.0) / M);
}

McReport run_monte_carlo(const SimTables& tb, const McOptions& opt) {
    if (opt.paths == 0) throw ConfigError("BadConfig", "paths must be positive");
    const TimeGrid& g = tb.g;
    const int m = tb.m;
    const std::vector<int> cps = checkpoint_nodes(g, opt.checkpoints);
    const size_t M = opt.paths, C = cps.size();
    std::vector<double> J1(M), J2(M), cphi(M * C * m), cpred(M * C * m);
    const size_t nblocks = (M + kBlock - 1) / kBlock;
    const size_t nodes = static_cast<size_t>(g.N + 1);
    std::vector<double> bu1(nblocks * nodes, 0.0), bu2(nblocks * nodes, 0.0), bmax(nblocks, 0.0);

    for_blocks(M, opt.workers, [&](size_t b, size_t lo, size_t hi) {
        for (size_t p = lo; p < hi; ++p) {
            SimulatedPath P = simulate_path(tb, opt.seed, p);
            J1[p] = P.J1;
            J2[p] = P.J2;
            for (size_t c = 0; c < C; ++c) {
                for (int i = 0; i < m; ++i) {
                    cphi[(p * C + c) * m + i] = P.phi_at(cps[c])(i);
                    cpred[(p * C + c) * m + i] = P.pred_at(cps[c])(i);
                }
            }
            for (int k = 0; k <= g.N; ++k) {
                double a1 = P.u1_at(k).norm(), a2 = P.u2_at(k).norm();
                bu1[b * nodes + k] += a1;
                bu2[b * nodes + k] += a2;
                bmax[b] = std::max({bmax[b], P.u1_at(k).cwiseAbs().maxCoeff(), P.u2_at(k).cwiseAbs().maxCoeff()});
            }
        }
    });

    McReport rep;
    rep.paths = M;
    rep.seed = opt.seed;
    mean_se(J1, rep.J1, rep.J1_se);
    mean_se(J2, rep.J2, rep.J2_se);
    rep.mean_abs_u1.assign(nodes, 0.0);
    rep.mean_abs_u2.assign(nodes, 0.0);
    for (size_t b = 0; b < nblocks; ++b) {
        for (size_t k = 0; k < nodes; ++k) {
            rep.mean_abs_u1[k] += bu1[b * nodes + k];
            rep.mean_abs_u2[k] += bu2[b * nodes + k];
        }
        rep.max_abs_u = std::max(rep.max_abs_u, bmax[b]);
    }
    for (size_t k = 0; k < nodes; ++k) {
        rep.mean_abs_u1[k] /= static_cast<double>(M);
        rep.mean_abs_u2[k] /= static_cast<double>(M);
    }
    std::vector<double> col(M);
    for (size_t c = 0; c < C; ++c) {
        Checkpoint cp;
        cp.node = cps[c];
        cp.t = g.t(cps[c]);
        cp.mean_phi = cp.se_phi = cp.mean_pred = cp.se_pred = Vec::Zero(m);
        for (int i = 0; i < m; ++i) {
            for (size_t p = 0; p < M; ++p) col[p] = cphi[(p * C + c) * m + i];
            mean_se(col, cp.mean_phi(i), cp.se_phi(i));
            for (size_t p = 0; p < M; ++p) col[p] = cpred[(p * C + c) * m + i];
            mean_se(col, cp.mean_pred(i), cp.se_pred(i));
        }
        rep.checkpoints.push_back(cp);
    }
    return rep;
}

LeaderResponse parse_leader_response(const std::string& s) {
    if (s == "fixed" || s == "fixed_gain") return LeaderResponse::FixedGain;
    if (s == "exact") return LeaderResponse::Exact;
    throw ConfigError("BadConfig", "unknown leader_response '" + s + "' (fixed|exact)");
}

std::string to_string(LeaderResponse r) { return r == LeaderResponse::FixedGain ? "fixed" : "exact"; }

double direction_value(const std::string& name, double t, double T) {
    if (name == "constant") return 1.0;
    if (name == "sin") return std::sin(2.0 * std::numbers::pi * t / T);
    if (name == "ramp") return t / T;
    throw ConfigError("BadConfig", "unknown direction '" + name + "' (constant|sin|ramp)");
}

std::vector<Vec> zeta1_response(const SimTables& tb, const std::vector<Vec>& v) {
    const TimeGrid& g = tb.g;
    const int n = tb.n, d = g.d, hz = g.N + 1;
    std::vector<Vec> z(static_cast<size_t>(hz + d + 1), Vec::Zero(n));
    auto vat = [&](int j) -> Vec { return j >= 0 && j <= hz ? v[j] : Vec::Zero(tb.k2); };
    for (int k = g.N; k >= 0; --k) {
        const int q = k + 1;
        Vec acc = Vec::Zero(n);
        mv(tb.A1T.at(q), n, n, z[q].data(), acc.data());
        mv(tb.AtT.at(q + d), n, n, z[q + d].data(), acc.data());
        Vec vq = vat(q), vl = vat(q - d);
        mv(tb.N1.at(q), n, tb.k2, vq.data(), acc.data(), -1.0);
        mv(tb.N2.at(q), n, tb.k2, vl.data(), acc.data(), -1.0);
        z[k] = z[q] + g.dt * acc;
    }
    return z;
}

OptimalityReport perturbation_test(const SimTables& tb, const PerturbOptions& opt) {
    if (opt.paths == 0) throw ConfigError("BadConfig", "paths must be positive");
    if (opt.epsilons.empty() || opt.directions.empty()) throw ConfigError("BadConfig", "need epsilons and directions");
    for (double e : opt.epsilons)
        if (!(e > 0.0)) throw ConfigError("BadConfig", "epsilons must be positive");
    const TimeGrid& g = tb.g;
    const int d = g.d, k1 = tb.k1, k2 = tb.k2, hz = g.N + 1;
    const size_t ND = opt.directions.size(), NE = opt.epsilons.size(), M = opt.paths;

    // direction samples on k = 0..N+1, and the exact-response offsets w
    std::vector<std::vector<double>> v1(ND), v2(ND), wdir(ND);
    for (size_t i = 0; i < ND; ++i) {
        v1[i].assign(static_cast<size_t>(hz + 1) * k1, 0.0);
        v2[i].assign(static_cast<size_t>(hz + 1) * k2, 0.0);
        std::vector<Vec> vv;
        for (int k = 0; k <= hz; ++k) {
            double s = direction_value(opt.directions[i], g.t(k), g.T);
            for (int j = 0; j < k1; ++j) v1[i][k * k1 + j] = s;
            for (int j = 0; j < k2; ++j) v2[i][k * k2 + j] = s;
            vv.push_back(Vec::Constant(k2, s));
        }
        std::vector<Vec> z = zeta1_response(tb, vv);
        wdir[i].assign(static_cast<size_t>(hz + 1) * k1, 0.0);
        for (int k = 0; k <= hz; ++k) {
            mv(tb.Wb.at(k), k1, tb.n, z[k + d].data(), &wdir[i][k * k1]);
            mv(tb.Wd.at(k), k1, k2, vv[k].data(), &wdir[i][k * k1]);
        }
    }

    std::vector<double> fdel(M * ND * NE), lder(M * ND * NE), lfloor(M * ND * NE);
    for_blocks(M, opt.workers, [&](size_t, size_t lo, size_t hi) {
        for (size_t p = lo; p < hi; ++p) {
            const std::vector<double> dW = brownian_increments(g, opt.seed, p);
            SimulatedPath base = simulate_path(tb, dW);
            const std::vector<double> Xbar = base.state();
            std::vector<double> u1 = base.u1;
            const std::vector<double> X0 = simulate_state(tb, dW, u1, base.u2);
            const double J1base = path_cost(tb, 1, X0, base.u1);
            for (size_t i = 0; i < ND; ++i) {
                for (size_t e = 0; e < NE; ++e) {
                    const double eps = opt.epsilons[e];
                    u1 = base.u1;
                    for (int k = 0; k <= hz; ++k)
                        for (int j = 0; j < k1; ++j) u1[(k + d) * k1 + j] += eps * v1[i][k * k1 + j];
                    std::vector<double> X = simulate_state(tb, dW, u1, base.u2);
                    fdel[(p * ND + i) * NE + e] = path_cost(tb, 1, X, u1) - J1base;

                    double J2s[2], mag[2];
                    for (int sgn = 0; sgn < 2; ++sgn) {
                        const double s = sgn == 0 ? eps : -eps;
                        if (opt.leader == LeaderResponse::FixedGain) {
                            std::vector<double> ov(static_cast<size_t>(hz + 1) * k2);
                            for (int k = 0; k <= hz; ++k)
                                for (int j = 0; j < k2; ++j)
                                    ov[k * k2 + j] = base.u2[(k + d) * k2 + j] + s * v2[i][k * k2 + j];
                            SimulatedPath P = simulate_path(tb, dW, &ov);
                            J2s[sgn] = path_cost(tb, 2, P.state(), P.u2, &mag[sgn]);
                        } else {
                            std::vector<double> u2 = base.u2;
                            for (int k = 0; k <= hz; ++k)
                                for (int j = 0; j < k2; ++j) u2[(k + d) * k2 + j] += s * v2[i][k * k2 + j];
                            std::vector<double> w(wdir[i].size());
                            for (size_t q = 0; q < w.size(); ++q) w[q] = s * wdir[i][q];
                            FollowerReaction fr{&base.u1, &Xbar, &w};
                            std::vector<double> uu = base.u1;
                            std::vector<double> Xs = simulate_state(tb, dW, uu, u2, &fr);
                            J2s[sgn] = path_cost(tb, 2, Xs, u2, &mag[sgn]);
                        }
                    }
                    lder[(p * ND + i) * NE + e] = (J2s[0] - J2s[1]) / (2.0 * eps);
                    lfloor[(p * ND + i) * NE + e] = kRoundoffUlps * (hz + 1 + d) * DBL_EPSILON * (mag[0] + mag[1]) / (2.0 * eps);
                }
            }
        }
    });

    OptimalityReport rep;
    rep.leader_variant = to_string(opt.leader);
    rep.paths = M;
    rep.seed = opt.seed;
    rep.follower_pass = rep.leader_pass = true;
    std::vector<double> col(M);
    for (size_t i = 0; i < ND; ++i) {
        std::vector<double> ys;
        for (size_t e = 0; e < NE; ++e) {
            FollowerEntry fe;
            fe.direction = opt.directions[i];
            fe.eps = opt.epsilons[e];
            for (size_t p = 0; p < M; ++p) col[p] = fdel[(p * ND + i) * NE + e];
            mean_se(col, fe.mean, fe.se);
            fe.pass = fe.mean >= -3.0 * fe.se;
            rep.follower_pass = rep.follower_pass && fe.pass;
            ys.push_back(fe.mean);
            rep.follower.push_back(fe);

            LeaderEntry le;
            le.direction = opt.directions[i];
            le.eps = opt.epsilons[e];
            for (size_t p = 0; p < M; ++p) col[p] = lder[(p * ND + i) * NE + e];
            mean_se(col, le.mean, le.se);
            le.roundoff = 0.0;
            for (size_t p = 0; p < M; ++p) le.roundoff += lfloor[(p * ND + i) * NE + e];
            le.roundoff /= static_cast<double>(M);
            le.pass = std::fabs(le.mean) <= 3.0 * le.se + le.roundoff;
            rep.leader_pass = rep.leader_pass && le.pass;
            rep.leader.push_back(le);
        }
        // least squares y = a eps + b eps^2
        double s2 = 0, s3 = 0, s4 = 0, y1 = 0, y2 = 0;
        for (size_t e = 0; e < NE; ++e) {
            double x = opt.epsilons[e];
            s2 += x * x;
            s3 += x * x * x;
            s4 += x * x * x * x;
            y1 += x * ys[e];
            y2 += x * x * ys[e];
        }
        CurvatureEntry ce;
        ce.direction = opt.directions[i];
        double det = s2 * s4 - s3 * s3;
        if (NE >= 2 && det > 0.0) {
            ce.a = (y1 * s4 - y2 * s3) / det;
            ce.b = (s2 * y2 - s3 * y1) / det;
        } else {
            ce.b = ys[0] / (opt.epsilons[0] * opt.epsilons[0]);
        }
        ce.pass = ce.b > 0.0;
        rep.follower_pass = rep.follower_pass && ce.pass;
        rep.curvature.push_back(ce);
    }
    return rep;
}

}  // namespace stackdelay

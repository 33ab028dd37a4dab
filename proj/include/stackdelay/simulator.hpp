// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stackdelay/feedback_gains.hpp"

namespace stackdelay {

// per-node row-major blocks, nodes first..first+count-1
struct Dense {
    int rows = 0;
    int cols = 0;
    int first = 0;
    int count = 0;
    std::vector<double> v;

    const double* at(int k) const { return v.data() + static_cast<size_t>(k - first) * rows * cols; }
    double* at(int k) { return v.data() + static_cast<size_t>(k - first) * rows * cols; }
};

Dense flatten(const Schedule& s, int first, int last);
Dense flatten(const Schedule& s);

// everything the path loop reads, precomputed once
struct SimTables {
    TimeGrid g;
    int n = 0, m = 0, k1 = 0, k2 = 0;

    // stacked system, nodes 0..N+1+d; Gp/Hp absorb the conditional-mean substitutions
    Dense A1, Gp, A3, D, Mv;
    Dense Ab1, Hp, Ab3, Db, Mbv;
    Dense Phi;  // Phi(k+1+d, k+1) for k = 0..N

    Dense Ku2, Ku1n, Ku1p;  // 0..N+1

    // original state equation and costs, nodes 0..N+1
    Dense A, Abar, B1, B2, C, Cbar, D1, D2;
    Dense Q1, Q1bar, Q2, Q2bar, R1, R1bar, R2, R2bar;
    Mat G1, G2;

    // exact follower response to a leader perturbation
    Dense Kx;   // Om1^-1(k) D1bar'P1 Cbar(k+d), 0..N+1
    Dense Wb;   // Om1^-1(k) B1bar'(k+d)
    Dense Wd;   // Om1^-1(k) D1bar'P1 D2bar(k+d)
    Dense AtT;  // A2tilde', 0..N+1+d
    Dense A1T;  // A', 0..N+1
    Dense N1, N2;

    std::vector<Vec> phi_hist;  // stacked history, k = -d..0
    std::vector<Vec> eta1, eta2;  // k = -d..-1 at index k+d
    std::vector<Vec> fan0;        // deterministic predictions p(0..d)
};

struct PipelineResult;
SimTables build_sim_tables(const PipelineResult& r);

struct SimulatedPath {
    int d = 0, N = 0, m = 0, k1 = 0, k2 = 0;
    std::vector<double> phi;   // k = -d..N+1, row k+d
    std::vector<double> pred;  // p(r) = phihat(r | r-d), r = 0..N+1+d
    std::vector<double> u1;    // k = -d..N+1, row k+d (history = eta)
    std::vector<double> u2;
    std::vector<double> dW;    // k = 0..N
    double J1 = 0.0, J2 = 0.0;

    Eigen::Map<const Vec> phi_at(int k) const { return {phi.data() + (k + d) * m, m}; }
    Eigen::Map<const Vec> pred_at(int r) const { return {pred.data() + r * m, m}; }
    Eigen::Map<const Vec> u1_at(int k) const { return {u1.data() + (k + d) * k1, k1}; }
    Eigen::Map<const Vec> u2_at(int k) const { return {u2.data() + (k + d) * k2, k2}; }
    // state block, k = -d..N+1, row k+d
    std::vector<double> state() const;
};

// Brownian increments of one path, N(0, dt), keyed by (seed, path)
std::vector<double> brownian_increments(const TimeGrid& g, std::uint64_t seed, std::uint64_t path);

// u2_override: optional, rows k = 0..N+1, replaces the feedback leader control
SimulatedPath simulate_path(const SimTables& tb, const std::vector<double>& dW,
                            const std::vector<double>* u2_override = nullptr);
SimulatedPath simulate_path(const SimTables& tb, std::uint64_t seed, std::uint64_t path);

// phihat(k+i | k), i = 0..d, by drift-only stepping from the realized phi(k)
std::vector<Vec> predict_phi(const SimTables& tb, const SimulatedPath& p, int k);

// left-Riemann cost of player `which`; X and u hold rows k = -d..N+1
double path_cost(const SimTables& tb, int which, const std::vector<double>& X, const std::vector<double>& u,
                 double* abs_scale = nullptr);
void evaluate_path_costs(const SimTables& tb, SimulatedPath& p);

// follower reaction for the exact leader test
struct FollowerReaction {
    const std::vector<double>* u1bar = nullptr;  // rows k = -d..N+1
    const std::vector<double>* Xbar = nullptr;
    const std::vector<double>* w = nullptr;      // rows k = 0..N+1, already scaled
};

// the original delayed state equation; u1/u2 rows k = -d..N+1, returns X rows k = -d..N+1.
// with a reaction, u1 rows k >= 0 are overwritten as the state evolves
std::vector<double> simulate_state(const SimTables& tb, const std::vector<double>& dW, std::vector<double>& u1,
                                   const std::vector<double>& u2, const FollowerReaction* react = nullptr);

struct Checkpoint {
    int node = 0;
    double t = 0.0;
    Vec mean_phi, se_phi, mean_pred, se_pred;
};

struct McReport {
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    double J1 = 0.0, J1_se = 0.0, J2 = 0.0, J2_se = 0.0;
    std::vector<Checkpoint> checkpoints;
    std::vector<double> mean_abs_u1, mean_abs_u2;  // k = 0..N
    double max_abs_u = 0.0;
};

struct McOptions {
    std::size_t paths = 1000;
    std::uint64_t seed = 1;
    int checkpoints = 10;
    int workers = 1;
};

McReport run_monte_carlo(const SimTables& tb, const McOptions& opt);

// evenly spaced nodes in [d, N+1]
std::vector<int> checkpoint_nodes(const TimeGrid& g, int count);

// mean and standard error with fixed-order summation
void mean_se(const std::vector<double>& x, double& mean, double& se);

enum class LeaderResponse { FixedGain, Exact };
LeaderResponse parse_leader_response(const std::string& s);
std::string to_string(LeaderResponse r);

struct PerturbOptions {
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::vector<double> epsilons{0.01, 0.05, 0.1};
    std::vector<std::string> directions{"constant", "sin", "ramp"};
    LeaderResponse leader = LeaderResponse::Exact;
};

struct FollowerEntry {
    std::string direction;
    double eps = 0.0, mean = 0.0, se = 0.0;
    bool pass = false;
};
struct CurvatureEntry {
    std::string direction;
    double a = 0.0, b = 0.0;
    bool pass = false;
};
struct LeaderEntry {
    std::string direction;
    double eps = 0.0, mean = 0.0, se = 0.0;
    double roundoff = 0.0;  // floating-point floor added to the 3 SE band
    bool pass = false;
};

struct OptimalityReport {
    std::string leader_variant;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    std::vector<FollowerEntry> follower;
    std::vector<CurvatureEntry> curvature;
    std::vector<LeaderEntry> leader;
    bool follower_pass = false;
    bool leader_pass = false;
    bool pass() const { return follower_pass && leader_pass; }
};

// deterministic perturbation direction at time t
double direction_value(const std::string& name, double t, double T);

// zeta1 response to a leader perturbation v (k = 0..N), zero beyond T
std::vector<Vec> zeta1_response(const SimTables& tb, const std::vector<Vec>& v);

OptimalityReport perturbation_test(const SimTables& tb, const PerturbOptions& opt);

}  // namespace stackdelay

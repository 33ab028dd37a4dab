// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stackdelay/grid.hpp"

namespace stackdelay {

// matrix-valued function of time
struct CoeffFn {
    int rows = 0;
    int cols = 0;
    std::function<Mat(double)> f;
    std::optional<Mat> beyond;  // weights only: value used for t >= T

    Mat operator()(double t) const { return f ? f(t) : Mat::Zero(rows, cols); }

    static CoeffFn zero(int r, int c);
    static CoeffFn constant(const Mat& m);
    static CoeffFn scalar(double s) { return constant(Mat::Constant(1, 1, s)); }
    // rows (t_i, M_i), piecewise constant and right-continuous
    static CoeffFn table(std::vector<std::pair<double, Mat>> rows);
};

struct GameSpec {
    double T = 1.0;
    double delta = 1.0;
    int n = 1;
    int k1 = 1;
    int k2 = 1;
    CoeffFn A, Abar, C, Cbar;
    CoeffFn B1bar, D1bar, B2bar, D2bar;
    CoeffFn Q1, Q1bar, Q2, Q2bar;
    CoeffFn R1, R1bar, R2, R2bar;
    Mat G1, G2;
    CoeffFn phi, eta1, eta2;  // initial data on [-delta, 0]
};

// coefficients sampled on the extended grid [-d, N+1+d]
struct ValidatedSpec {
    GameSpec spec;
    TimeGrid grid;
    Schedule A, Abar, C, Cbar;
    Schedule B1bar, D1bar, B2bar, D2bar;
    Schedule Q1, Q1bar, Q2, Q2bar;
    Schedule R1, R1bar, R2, R2bar;
    Mat G1, G2;
    Schedule phi, eta1, eta2;  // nodes [-d, 0]

    int n() const { return spec.n; }
    int k1() const { return spec.k1; }
    int k2() const { return spec.k2; }
};

ValidatedSpec validate_spec(const GameSpec& spec, const TimeGrid& grid);
ValidatedSpec validate_spec(const ValidatedSpec& vs);

struct AssumptionReport {
    std::string name;
    bool pass = true;
    double tol = 0.0;
    std::vector<std::string> labels;
    std::vector<double> residuals;
    std::vector<int> worst_node;
    std::string note;

    std::string summary() const;
};

double default_tolerance(const Schedule& P);

AssumptionReport check_A1(const ValidatedSpec& vs, const Schedule& P1, double tol = -1.0);
AssumptionReport check_A2(const ValidatedSpec& vs, const Schedule& P2, double tol = -1.0);
// checked on delta <= t < T
AssumptionReport check_A3(const ValidatedSpec& vs, const Schedule& P1, const Schedule& Omega1,
                          double tol = -1.0);
AssumptionReport check_one_dim_conditions(const ValidatedSpec& vs);

}  // namespace stackdelay

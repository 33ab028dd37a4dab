// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <vector>

#include "stackdelay/stacked_system.hpp"

namespace stackdelay {

// L on nodes 0..N+1, Pi(k, j) for k <= j <= min(k+d, N+1)
struct CoupledSolution {
    TimeGrid grid;
    int m = 0;
    Schedule L;
    Schedule PiInt;
    std::vector<Mat> band;  // Pi(k, k+i) at k*(d+1) + i
    double asym_L = 0.0;    // largest relative asymmetry seen before symmetrizing
    double asym_Pi = 0.0;

    bool in_band(int k, int j) const {
        return k >= 0 && j >= k && j - k <= grid.d && j <= grid.N + 1;
    }
    const Mat& pi(int k, int j) const;
    Mat& pi(int k, int j);
    double max_norm() const;
};

inline constexpr double kBlowup = 1e12;

// Omega3^-1 at t_k - delta, zero before delta
Mat omega3_inv_lag(const Omegas& om, const TimeGrid& g, int k);

CoupledSolution solve_L_Pi(const StackedCoefficients& st, const Omegas& om, const TimeGrid& g);

struct ResidualReport {
    double defect = 0.0;
    int node = -1;
};

// recomputes every update of the recursion from the stored fields;
// propagation defects are divided by the step
ResidualReport residual_check(const CoupledSolution& sol, const StackedCoefficients& st, const Omegas& om);

Mat pi_integral(const CoupledSolution& sol, int k);

}  // namespace stackdelay

// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "stackdelay/game_model.hpp"
#include "stackdelay/riccati_solver.hpp"

namespace stackdelay {

// leader-problem coefficients, nodes 0..N+1+d
struct HatCoefficients {
    Schedule A1, A2, A2t, C1, C2, C2t;
    Schedule B, D;
    Schedule F, H, K, M;
    Schedule N1, N2;
};

// 2n-dimensional stacked system, nodes 0..N+1+d
struct StackedCoefficients {
    int n = 0;
    int m = 0;
    Schedule A1, A2, A3, B, C;
    Schedule Ab1, Ab2, Ab3, Cb, E;
    Schedule D, Db, G1, G2;
    Schedule Mv, Mbv;
};

struct XiTriple {
    Mat Xi1, Xi2, Xi3;
};

HatCoefficients build_hats(const ValidatedSpec& vs, const Schedule& P1, const Schedule& Omega1);
StackedCoefficients build_calligraphic(const ValidatedSpec& vs, const HatCoefficients& hats,
                                       const Schedule& P2, const Omegas& om);

inline constexpr double kResolventRcond = 1e-10;

// [I - L Cb]^-1 with a reciprocal condition check
Mat resolvent(const Mat& L, const Mat& Cb, int node, double* rcond_out = nullptr);

XiTriple build_xi(const StackedCoefficients& st, const Mat& L, const Mat& Om3inv_lag, int node);

}  // namespace stackdelay

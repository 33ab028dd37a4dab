// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>

#include "stackdelay/matrix_equation_solver.hpp"

namespace stackdelay {

// indexed by the node where the control is applied, 0..N+1
//   u2(k) = Ku2(k) phihat(k+d | k)
//   u1(k) = Ku1_now(k) phi(k) + Ku1_pred(k) phihat(k+d | k)
struct GainSchedule {
    Schedule Ku2;
    Schedule Ku1_now;
    Schedule Ku1_pred;
};

Schedule compute_leader_gain(const StackedCoefficients& st, const CoupledSolution& sol, const Omegas& om);

void compute_follower_gains(const ValidatedSpec& vs, const Schedule& P1, const StackedCoefficients& st,
                            const CoupledSolution& sol, const Omegas& om, GainSchedule& out);

GainSchedule compute_gains(const ValidatedSpec& vs, const Schedule& P1, const StackedCoefficients& st,
                           const CoupledSolution& sol, const Omegas& om);

// psi(t_k) from L, the Pi band and predictions phihat(t_k | base), base in [k+1-d, k]
Vec reconstruct_psi(const CoupledSolution& sol, const Vec& phi_k, const std::function<Vec(int)>& phihat_from,
                    int k);

}  // namespace stackdelay

// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <string>

#include "stackdelay/game_model.hpp"

namespace stackdelay {

enum class Integrator { Euler, RK4 };

Integrator parse_integrator(const std::string& s);
std::string to_string(Integrator i);

struct HatCoefficients;

// coefficient set of one pseudo-Riccati equation
//   -dP = [P A + A'P + C'P C + C2(t+d)'P(t+d)C2(t+d) + Q + Qbar(t+d)
//          - C2'P D(t+d) Om^-1 D'P C2(t+d)] dt,   Om = R + Rbar(t+d) + D'P D(t+d)
struct PseudoRiccatiData {
    const Schedule* A = nullptr;
    const Schedule* C = nullptr;
    const Schedule* C2 = nullptr;
    const Schedule* D = nullptr;
    const Schedule* Q = nullptr;
    const Schedule* Qbar = nullptr;
    const Schedule* R = nullptr;
    const Schedule* Rbar = nullptr;
    Mat G;
    const char* name = "P";
};

struct PseudoRiccatiResult {
    Schedule P;      // extended grid, zero beyond T
    Schedule Omega;  // nodes 0..N+1
};

PseudoRiccatiResult solve_pseudo_riccati(const TimeGrid& g, const PseudoRiccatiData& data,
                                         Integrator integ = Integrator::Euler);

Schedule solve_P1(const ValidatedSpec& vs, Integrator integ = Integrator::Euler);
Schedule solve_P2(const ValidatedSpec& vs, const HatCoefficients& hats,
                  Integrator integ = Integrator::Euler);

// high resolution quadrature of the scalar closed form, which = 1 or 2
Schedule closed_form_P_one_dim(const ValidatedSpec& vs, int which);

struct Omegas {
    Schedule O1, O2, O3;
    Schedule O1inv, O2inv, O3inv;
};

bool is_positive_definite(const Mat& m);
Mat checked_inverse(const Mat& m, const char* name, int node);

Schedule omega1_schedule(const ValidatedSpec& vs, const Schedule& P1);
Omegas compute_omegas(const ValidatedSpec& vs, const Schedule& P1, const Schedule& P2,
                      const HatCoefficients& hats);

}  // namespace stackdelay

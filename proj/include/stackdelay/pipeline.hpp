// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "stackdelay/feedback_gains.hpp"

namespace stackdelay {

struct PipelineResult {
    ValidatedSpec vs;
    Integrator integ = Integrator::Euler;
    Schedule P1, P2;
    HatCoefficients hats;
    Omegas om;
    StackedCoefficients st;
    CoupledSolution sol;
    GainSchedule gains;
};

// riccati -> hats -> P2 -> omegas -> stacked -> L/Pi -> gains
PipelineResult run_pipeline(const ValidatedSpec& vs, Integrator integ = Integrator::Euler);

}  // namespace stackdelay

// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/pipeline.hpp"

namespace stackdelay {

PipelineResult run_pipeline(const ValidatedSpec& vs, Integrator integ) {
    PipelineResult r;
    r.vs = vs;
    r.integ = integ;
    r.P1 = solve_P1(vs, integ);
    r.hats = build_hats(vs, r.P1, omega1_schedule(vs, r.P1));
    r.P2 = solve_P2(vs, r.hats, integ);
    r.om = compute_omegas(vs, r.P1, r.P2, r.hats);
    r.st = build_calligraphic(vs, r.hats, r.P2, r.om);
    r.sol = solve_L_Pi(r.st, r.om, vs.grid);
    r.gains = compute_gains(vs, r.P1, r.st, r.sol, r.om);
    return r;
}

}  // namespace stackdelay

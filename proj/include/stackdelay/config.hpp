// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "stackdelay/riccati_solver.hpp"
#include "stackdelay/simulator.hpp"

namespace stackdelay {

struct RunConfig {
    GameSpec spec;
    int N = 999;
    Integrator integ = Integrator::Euler;

    std::size_t paths = 1000;
    std::uint64_t seed = 1;
    int checkpoints = 10;
    int workers = 1;

    std::vector<double> epsilons{0.01, 0.05, 0.1};
    std::vector<std::string> directions{"constant", "sin", "ramp"};
    LeaderResponse leader = LeaderResponse::Exact;

    std::string out_dir = "out";
    int export_paths = 3;
    bool pi_band = false;

    nlohmann::json raw;  // the document as parsed

    TimeGrid grid() const { return make_grid(spec.T, spec.delta, N); }
    ValidatedSpec validated() const { return validate_spec(spec, grid()); }
};

// throws ConfigError on any schema problem, including unknown keys
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// built-in configurations of the two worked examples, which = 1 or 2
nlohmann::json builtin_config(int which);

// a coefficient value in any accepted form
CoeffFn parse_coeff(const nlohmann::json& v, int rows, int cols, const std::string& name, bool allow_beyond);

}  // namespace stackdelay

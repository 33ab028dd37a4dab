// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <json.hpp>
#include <algorithm>
#include <random>

#include "stackdelay/config.hpp"
#include "stackdelay/pipeline.hpp"

namespace fx {

using nlohmann::json;

inline json example_json(int which, int N = 0, const char* integ = nullptr) {
    json j = stackdelay::builtin_config(which);
    if (N > 0) j["grid"] = {{"N", N}};
    if (integ) j["solver"]["integrator"] = integ;
    return j;
}

inline stackdelay::RunConfig config(const json& j) { return stackdelay::parse_config(j); }

inline stackdelay::ValidatedSpec spec(const json& j) { return config(j).validated(); }

inline stackdelay::PipelineResult pipeline(const json& j) {
    stackdelay::RunConfig rc = config(j);
    return stackdelay::run_pipeline(rc.validated(), rc.integ);
}

inline stackdelay::PipelineResult pipeline(int which, int N = 0, const char* integ = nullptr) {
    return pipeline(example_json(which, N, integ));
}

inline double max_abs(const stackdelay::Schedule& s, int a, int b) {
    double m = 0.0;
    for (int k = a; k <= b; ++k) m = std::max(m, s[k].cwiseAbs().maxCoeff());
    return m;
}

inline stackdelay::Mat random_sym(std::mt19937_64& rng, int n, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    stackdelay::Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
    return 0.5 * (a + a.transpose());
}

}  // namespace fx

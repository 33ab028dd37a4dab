// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stackdelay/errors.hpp"

namespace stackdelay {

TimeGrid make_grid(double T, double delta, int N) {
    if (!(T > 0.0) || !(delta > 0.0))
        throw DimensionMismatch("horizon and delay must be positive");
    if (N < 1) throw DimensionMismatch("grid N must be >= 1");
    if (delta > T) throw DelayExceedsHorizon("delay " + std::to_string(delta) + " > horizon " + std::to_string(T));
    TimeGrid g;
    g.T = T;
    g.delta = delta;
    g.N = N;
    g.dt = T / (N + 1);
    double ratio = delta / g.dt;
    double r = std::round(ratio);
    if (r < 1.0 || std::fabs(ratio - r) > 1e-9 * std::max(1.0, ratio))
        throw DelayNotDivisible("delay/step = " + std::to_string(ratio) + " is not an integer");
    g.d = static_cast<int>(r);
    if (g.d > N + 1) throw DelayExceedsHorizon("lag exceeds grid");
    return g;
}

const Mat& Schedule::at(int k) const {
    if (!contains(k)) throw IndexOutOfRange("schedule node " + std::to_string(k));
    return (*this)[k];
}

double Schedule::max_norm() const {
    double m = 0.0;
    for (const auto& x : v_) m = std::max(m, x.norm());
    return m;
}

}  // namespace stackdelay

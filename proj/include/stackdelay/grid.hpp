// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace stackdelay {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// uniform grid, nodes t_k = k*dt for k in [-d, N+1+d]
struct TimeGrid {
    double T = 0.0;
    double delta = 0.0;
    int N = 0;
    double dt = 0.0;
    int d = 0;

    int first() const { return -d; }
    int last() const { return N + 1 + d; }
    int horizon_node() const { return N + 1; }
    double t(int k) const { return k * dt; }
};

TimeGrid make_grid(double T, double delta, int N);

// per-node matrix samples over [first, last]
class Schedule {
public:
    Schedule() = default;
    Schedule(int first, int last, int rows, int cols)
        : first_(first), rows_(rows), cols_(cols),
          v_(static_cast<size_t>(last - first + 1), Mat::Zero(rows, cols)) {}

    const Mat& operator[](int k) const { return v_[static_cast<size_t>(k - first_)]; }
    Mat& operator[](int k) { return v_[static_cast<size_t>(k - first_)]; }
    const Mat& at(int k) const;

    int first() const { return first_; }
    int last() const { return first_ + static_cast<int>(v_.size()) - 1; }
    bool contains(int k) const { return k >= first_ && k <= last(); }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return v_.empty(); }

    // zero outside the stored range
    Mat get_or_zero(int k) const { return contains(k) ? (*this)[k] : Mat::Zero(rows_, cols_); }
    double max_norm() const;

private:
    int first_ = 0;
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Mat> v_;
};

inline Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace stackdelay

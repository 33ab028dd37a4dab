// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stackdelay {

// config/usage problems map to exit code 2, numerical ones to 1
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg, int node = -1)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)), node_(node) {}
    const std::string& kind() const { return kind_; }
    int node() const { return node_; }
    virtual bool is_config_error() const { return false; }

private:
    std::string kind_;
    int node_;
};

class ConfigError : public Error {
public:
    ConfigError(std::string kind, const std::string& msg) : Error(std::move(kind), msg) {}
    bool is_config_error() const override { return true; }
};

struct DimensionMismatch : ConfigError {
    explicit DimensionMismatch(const std::string& m) : ConfigError("DimensionMismatch", m) {}
};
struct NonSymmetricWeight : ConfigError {
    explicit NonSymmetricWeight(const std::string& m) : ConfigError("NonSymmetricWeight", m) {}
};
struct DelayNotDivisible : ConfigError {
    explicit DelayNotDivisible(const std::string& m) : ConfigError("DelayNotDivisible", m) {}
};
struct DelayExceedsHorizon : ConfigError {
    explicit DelayExceedsHorizon(const std::string& m) : ConfigError("DelayExceedsHorizon", m) {}
};
struct NotOneDimensional : ConfigError {
    explicit NotOneDimensional(const std::string& m) : ConfigError("NotOneDimensional", m) {}
};
struct GridMismatch : ConfigError {
    explicit GridMismatch(const std::string& m) : ConfigError("GridMismatch", m) {}
};
struct IndexOutOfRange : ConfigError {
    explicit IndexOutOfRange(const std::string& m) : ConfigError("IndexOutOfRange", m) {}
};

struct OmegaNotPositiveDefinite : Error {
    OmegaNotPositiveDefinite(const std::string& m, int node) : Error("OmegaNotPositiveDefinite", m, node) {}
};
struct SingularResolvent : Error {
    SingularResolvent(const std::string& m, int node, double rcond)
        : Error("SingularResolvent", m, node), rcond_(rcond) {}
    double rcond() const { return rcond_; }

private:
    double rcond_;
};
struct NumericalBlowup : Error {
    NumericalBlowup(const std::string& m, int node) : Error("NumericalBlowup", m, node) {}
};

}  // namespace stackdelay

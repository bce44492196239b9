// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace epp {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or inconsistent cluster/model/cost configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed input document (workload file, plan, trace).
struct ParseError : Error {
    using Error::Error;
};

// No plan satisfies the memory constraints.
struct InfeasibleError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Caller violated a documented precondition.
struct ContractError : Error {
    using Error::Error;
};

// Regression fit failed (underdetermined or rank-deficient samples).
struct FitError : Error {
    using Error::Error;
};

}  // namespace epp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "epp/errors.hpp"

namespace epp::milp {

/// Linear inequality: sum(coeff * x[var]) <= rhs.
struct Constraint {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0;
};

/// Bounded-integer minimization of sum(x) subject to linear inequalities.
/// Variables are integers in [0, upper[i]].
struct MilpInstance {
    int num_vars = 0;
    std::vector<int> upper;
    std::vector<Constraint> constraints;

    void validate() const;
};

struct Assignment {
    std::vector<int> values;
    double objective = 0;
};

enum class Status { Optimal, Infeasible };

struct SolveResult {
    Status status = Status::Infeasible;
    Assignment assignment;      // valid when Optimal
    bool proved_optimal = true;  // false when the node budget ran out and the
                                 // best incumbent was returned instead
};

struct LpResult {
    Status status = Status::Infeasible;
    double objective = 0;
    std::vector<double> x;
    // Reduced costs of the structural variables at the optimum; positive for
    // nonbasic-at-lower, negative for nonbasic-at-upper, near zero for basic.
    std::vector<double> reduced_costs;
};

/// Row-level feasibility used consistently by the solver, the brute-force
/// oracle and the tests: absolute slack tolerance 1e-7 scaled by the
/// constraint's max-norm.
bool satisfies(const MilpInstance& instance, const std::vector<int>& values);

/// Branch-and-bound: simplex relaxation bounds, most-fractional branching,
/// best-bound node order, incumbent pruning, reduced-cost fixing and
/// interval bound tightening. Optimality is proved within a deterministic
/// node budget; when byte-scale covering instances exhaust it (refuting the
/// relaxation floor without cutting planes can be intractable), the best
/// incumbent is returned with proved_optimal = false.
SolveResult solve(const MilpInstance& instance);

/// Exhaustive enumeration, the testing oracle. Refuses search spaces larger
/// than 1e7 points.
SolveResult brute_force(const MilpInstance& instance);

/// Continuous relaxation over the same box.
LpResult lp_relax(const MilpInstance& instance);

/// Human-readable dump for debugging and cross-checks with external solvers.
std::string dump(const MilpInstance& instance);

}  // namespace epp::milp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "epp/milp.hpp"
#include "support.hpp"

using namespace epp;
using milp::MilpInstance;
using milp::Status;

TEST_CASE("unconstrained instance solves to all zeros") {
    MilpInstance inst;
    inst.num_vars = 3;
    inst.upper = {4, 4, 4};
    const auto res = milp::solve(inst);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.assignment.objective == 0);
    CHECK(res.assignment.values == std::vector<int>{0, 0, 0});
}

TEST_CASE("covering constraint forces the minimum sum") {
    MilpInstance inst;
    inst.num_vars = 2;
    inst.upper = {4, 4};
    inst.constraints.push_back({{{0, -1.0}, {1, -1.0}}, -3.0});  // x0+x1 >= 3
    const auto res = milp::solve(inst);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.assignment.objective == 3);
    CHECK(milp::satisfies(inst, res.assignment.values));
}

TEST_CASE("empty box reports infeasible") {
    MilpInstance inst;
    inst.num_vars = 1;
    inst.upper = {4};
    inst.constraints.push_back({{{0, -1.0}}, -10.0});  // x0 >= 10 > 4
    CHECK(milp::solve(inst).status == Status::Infeasible);
    CHECK(milp::brute_force(inst).status == Status::Infeasible);
    CHECK(milp::lp_relax(inst).status == Status::Infeasible);
}

TEST_CASE("lp relaxation bounds the integer optimum") {
    MilpInstance inst;
    inst.num_vars = 1;
    inst.upper = {4};
    inst.constraints.push_back({{{0, -1.0}}, -1.5});  // x0 >= 1.5
    const auto lp = milp::lp_relax(inst);
    REQUIRE(lp.status == Status::Optimal);
    CHECK(lp.objective == doctest::Approx(1.5));
    const auto res = milp::solve(inst);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.assignment.objective == 2);
}

TEST_CASE("integral vertices close the gap") {
    MilpInstance inst;
    inst.num_vars = 2;
    inst.upper = {3, 3};
    inst.constraints.push_back({{{0, -1.0}}, -2.0});           // x0 >= 2
    inst.constraints.push_back({{{0, -1.0}, {1, -2.0}}, -4.0});  // x0+2x1 >= 4
    const auto lp = milp::lp_relax(inst);
    const auto res = milp::solve(inst);
    REQUIRE(lp.status == Status::Optimal);
    REQUIRE(res.status == Status::Optimal);
    CHECK(lp.objective == doctest::Approx(res.assignment.objective));
    CHECK(res.assignment.objective == 3);  // x0=2, x1=1
}

TEST_CASE("brute force refuses oversized search spaces") {
    MilpInstance inst;
    inst.num_vars = 12;
    inst.upper.assign(12, 9);
    CHECK_THROWS_AS(milp::brute_force(inst), ContractError);
}

TEST_CASE("solver agrees with the brute-force oracle on random instances") {
    test::Rng rng(2024);
    int feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const MilpInstance inst = test::random_instance(rng);
        const auto expect = milp::brute_force(inst);
        const auto got = milp::solve(inst);
        REQUIRE(expect.status == got.status);
        if (expect.status == Status::Optimal) {
            ++feasible;
            CHECK(got.assignment.objective == expect.assignment.objective);
            CHECK(milp::satisfies(inst, got.assignment.values));
            const auto lp = milp::lp_relax(inst);
            REQUIRE(lp.status == Status::Optimal);
            CHECK(lp.objective <= expect.assignment.objective + 1e-6);
        } else {
            ++infeasible;
        }
    }
    // The generator must exercise both outcomes.
    CHECK(feasible > 20);
    CHECK(infeasible > 5);
}

TEST_CASE("solve is deterministic") {
    test::Rng rng(7);
    const MilpInstance inst = test::random_instance(rng, 6, 4);
    const auto a = milp::solve(inst);
    const auto b = milp::solve(inst);
    REQUIRE(a.status == b.status);
    if (a.status == Status::Optimal)
        CHECK(a.assignment.values == b.assignment.values);
}

TEST_CASE("dump lists variables, bounds and rows") {
    MilpInstance inst;
    inst.num_vars = 2;
    inst.upper = {4, 2};
    inst.constraints.push_back({{{0, -1.5}, {1, 2.0}}, -3.25});
    const std::string text = milp::dump(inst);
    CHECK(text.find("0 <= x0 <= 4") != std::string::npos);
    CHECK(text.find("0 <= x1 <= 2") != std::string::npos);
    CHECK(text.find("-1.5*x0 + 2*x1 <= -3.25") != std::string::npos);
}

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "epp/checkpoint.hpp"
#include "support.hpp"

using namespace epp;

namespace {

struct Rig {
    ClusterConfig cluster;
    ModelConfig model;
    CostParams params;
    Rig(int dp, double mem, double token_bytes = 4096, double state = 1e6)
        : cluster(test::make_cluster(dp, 1, mem)),
          model(test::make_model(8 * dp, 32, token_bytes, dp, state)),
          params(test::make_params(0, 1e-5, 1e-3 * dp, 2.0)) {}
};

struct Prepared {
    PipelineUnit unit;
    std::vector<int> f2b;
    std::vector<std::vector<std::vector<int>>> windows;
};

Prepared prepare(const PipelineUnit& unit, const Rig& rig) {
    Prepared p;
    p.unit = unit;
    p.f2b = forward_to_backward_map(unit, rig.params, rig.cluster, rig.model);
    p.windows = enumerate_windows(unit, rig.params, rig.cluster, rig.model);
    return p;
}

PipelineUnit singletons(int count, long long tokens) {
    std::vector<SequenceGroup> groups;
    for (int i = 0; i < count; ++i) {
        SequenceGroup g;
        g.lead_seq = i;
        g.seq_ids = {i};
        g.tokens = tokens;
        g.chunks.push_back(test::batched({tokens}, i));
        groups.push_back(std::move(g));
    }
    return order_chunks(std::move(groups));
}

}  // namespace

TEST_CASE("expand_checkpoint indexes the ladder by backward order and stage") {
    // n=2, dp=2, identity backward map -> three variables.
    const std::vector<int> ladder = {7, 8, 9};
    const std::vector<int> f2b = {0, 1};
    CHECK(expand_checkpoint(ladder, 1, 0, f2b, 2) == ladder[1]);
    CHECK(expand_checkpoint(ladder, 2, 0, f2b, 2) == ladder[0]);
    CHECK(expand_checkpoint(ladder, 1, 1, f2b, 2) == ladder[2]);
    CHECK(expand_checkpoint(ladder, 2, 1, f2b, 2) == ladder[1]);
    CHECK_THROWS_AS(expand_checkpoint(ladder, 3, 0, f2b, 2), ContractError);
    CHECK_THROWS_AS(expand_checkpoint(ladder, 1, 5, f2b, 2), ContractError);
}

TEST_CASE("anti-diagonal cells share one ladder variable") {
    test::Rng rng(5);
    const int dp = 4, n = 6;
    std::vector<int> ladder(n + dp - 1);
    for (int& v : ladder) v = static_cast<int>(rng.range(0, 9));
    std::vector<int> f2b(n);
    for (int i = 0; i < n; ++i) f2b[i] = n - 1 - i;

    // In backward-order coordinates: cell (p, j) reads ladder[j + dp - p],
    // so (p, j) and (p + i, j + i) coincide.
    auto backward_cell = [&](int p, int j) {
        // invert f2b: forward index whose backward position is j
        int k = -1;
        for (int i = 0; i < n; ++i)
            if (f2b[i] == j) k = i;
        return expand_checkpoint(ladder, p, k, f2b, dp);
    };
    for (int p = 1; p <= dp; ++p)
        for (int j = 0; j < n; ++j)
            for (int i = 1; p + i <= dp && j + i < n; ++i)
                CHECK(backward_cell(p, j) == backward_cell(p + i, j + i));
}

TEST_CASE("milp build follows the ladder dimensions") {
    Rig rig(2, 1e12);
    const Prepared p = prepare(singletons(5, 100), rig);
    const auto inst =
        build_memory_milp(p.unit, p.windows, p.f2b, rig.cluster, rig.model);
    CHECK(inst.num_vars == 5 + 2 - 1);
    for (int u : inst.upper) CHECK(u == rig.model.layers_per_stage(rig.cluster));
    // Plenty of memory: every row is dropped as never-binding.
    CHECK(inst.constraints.empty());
    CHECK(milp::satisfies(inst, std::vector<int>(inst.num_vars, 0)));
}

TEST_CASE("a deliberate deficit forces exactly one checkpointed layer") {
    // One chunk on one stage; budget one slope-unit short of the intercept.
    Rig rig(1, 0);
    const PipelineUnit unit = singletons(1, 1000);
    const ActLinearization lin =
        linearize_activation(unit.chunks[0], rig.cluster, rig.model);
    REQUIRE(lin.slope > 0);
    rig.cluster.mem_capacity =
        rig.model.stage_state_bytes[0] + lin.intercept - 0.5 * lin.slope;

    const Prepared p = prepare(unit, rig);
    const auto inst =
        build_memory_milp(p.unit, p.windows, p.f2b, rig.cluster, rig.model);
    REQUIRE(inst.constraints.size() == 1);
    CHECK_FALSE(milp::satisfies(inst, {0}));
    CHECK(milp::satisfies(inst, {1}));

    const CheckpointSolution sol = solve_checkpointing(
        p.unit, p.windows, p.f2b, rig.params, rig.cluster, rig.model);
    REQUIRE(sol.feasible);
    CHECK(sol.ladder == std::vector<int>{1});
    CHECK(sol.recompute_seconds ==
          doctest::Approx(avg_layer_forward_seconds(p.unit, rig.params,
                                                    rig.cluster, rig.model)));
}

TEST_CASE("abundant memory solves to the zero ladder at zero cost") {
    Rig rig(2, 1e13);
    const Prepared p = prepare(singletons(4, 2000), rig);
    const CheckpointSolution sol = solve_checkpointing(
        p.unit, p.windows, p.f2b, rig.params, rig.cluster, rig.model);
    REQUIRE(sol.feasible);
    for (int v : sol.ladder) CHECK(v == 0);
    CHECK(sol.recompute_seconds == 0.0);
}

TEST_CASE("deficit below the full-checkpoint floor is infeasible") {
    Rig rig(1, 1e4, 4096.0 * 64, 1e6);
    const PipelineUnit unit = singletons(3, 5000);
    const Prepared p = prepare(unit, rig);
    const CheckpointSolution sol = solve_checkpointing(
        p.unit, p.windows, p.f2b, rig.params, rig.cluster, rig.model);
    CHECK_FALSE(sol.feasible);
    CHECK(sol.memory_deficit > 0);
}

TEST_CASE("solver matches brute force on tight little units") {
    test::Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const int dp = static_cast<int>(rng.range(1, 2));
        Rig rig(dp, 0, 8192, 1e5);
        // Small ladders so brute force stays cheap: n + dp - 1 <= 5.
        const int n = static_cast<int>(rng.range(1, 5 - (dp - 1)));
        const PipelineUnit unit = singletons(n, rng.range(500, 3000));
        // Budget strictly between zero-ckpt and full-ckpt demand.
        double zero_need = 0, full_need = 0;
        const int full = rig.model.layers_per_stage(rig.cluster);
        for (const Chunk& c : unit.chunks) {
            zero_need += activation_bytes(c, 0, rig.cluster, rig.model);
            full_need += activation_bytes(c, full, rig.cluster, rig.model);
        }
        const double mix = rng.real();
        rig.cluster.mem_capacity = rig.model.stage_state_bytes[0] +
                                   full_need +
                                   mix * std::max(0.0, zero_need - full_need);

        const Prepared p = prepare(unit, rig);
        const auto inst =
            build_memory_milp(p.unit, p.windows, p.f2b, rig.cluster, rig.model);
        const auto exact = milp::solve(inst);
        const auto brute = milp::brute_force(inst);
        REQUIRE(exact.status == brute.status);
        if (exact.status == milp::Status::Optimal)
            CHECK(exact.assignment.objective == brute.assignment.objective);
    }
}

TEST_CASE("solved ladders keep the simulated peaks under capacity") {
    test::Rng rng(83);
    for (int trial = 0; trial < 15; ++trial) {
        const int dp = static_cast<int>(rng.range(1, 3));
        Rig rig(dp, 0, 16384, 1e6);
        const PipelineUnit unit = test::random_unit(rng, 3, 5, 4000);
        // A budget that usually needs some checkpointing.
        double zero_need = 0, full_need = 0;
        const int full = rig.model.layers_per_stage(rig.cluster);
        for (const Chunk& c : unit.chunks) {
            zero_need += activation_bytes(c, 0, rig.cluster, rig.model);
            full_need += activation_bytes(c, full, rig.cluster, rig.model);
        }
        rig.cluster.mem_capacity = rig.model.stage_state_bytes[0] + full_need +
                                   0.5 * std::max(0.0, zero_need - full_need);

        const Prepared p = prepare(unit, rig);
        const CheckpointSolution sol = solve_checkpointing(
            p.unit, p.windows, p.f2b, rig.params, rig.cluster, rig.model);
        if (!sol.feasible) continue;

        const CkptMap map =
            ckpt_map_from_ladder(sol.ladder, p.f2b, dp, unit.size());
        const SimTrace trace =
            simulate_unit(unit, map, rig.params, rig.cluster, rig.model);
        for (int s = 0; s < dp; ++s) {
            CHECK(trace.peak_memory[s] <= rig.cluster.mem_capacity * (1 + 1e-9));
            CHECK_FALSE(trace.capacity_violation[s]);
        }
    }
}

TEST_CASE("tightening memory never reduces the checkpointing total") {
    test::Rng rng(91);
    Rig rig(2, 0, 16384, 1e6);
    const PipelineUnit unit = singletons(4, 2500);
    const Prepared base = prepare(unit, rig);

    double zero_need = 0, full_need = 0;
    const int full = rig.model.layers_per_stage(rig.cluster);
    for (const Chunk& c : unit.chunks) {
        zero_need += activation_bytes(c, 0, rig.cluster, rig.model);
        full_need += activation_bytes(c, full, rig.cluster, rig.model);
    }

    long long last_total = -1;
    bool was_feasible = true;
    for (int step = 10; step >= 0; --step) {
        rig.cluster.mem_capacity =
            rig.model.stage_state_bytes[0] + full_need * 0.8 +
            (zero_need - full_need * 0.8) * step / 10.0;
        const CheckpointSolution sol = solve_checkpointing(
            base.unit, base.windows, base.f2b, rig.params, rig.cluster,
            rig.model);
        if (!sol.feasible) {
            was_feasible = false;
            continue;
        }
        CHECK(was_feasible);  // once infeasible, shrinking cannot recover
        long long total = 0;
        for (int v : sol.ladder) total += v;
        if (last_total >= 0) CHECK(total >= last_total);
        last_total = total;
    }
}

TEST_CASE("milp dump is printable for cross-checking") {
    Rig rig(1, 0);
    const PipelineUnit unit = singletons(1, 1000);
    const ActLinearization lin =
        linearize_activation(unit.chunks[0], rig.cluster, rig.model);
    rig.cluster.mem_capacity =
        rig.model.stage_state_bytes[0] + lin.intercept - 0.5 * lin.slope;
    const Prepared p = prepare(unit, rig);
    const auto inst =
        build_memory_milp(p.unit, p.windows, p.f2b, rig.cluster, rig.model);
    const std::string text = milp::dump(inst);
    CHECK(text.find("minimize sum(x[i]) over 1 integer vars") !=
          std::string::npos);
    CHECK(text.find("r0:") != std::string::npos);
}

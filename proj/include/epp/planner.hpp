// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "epp/checkpoint.hpp"
#include "epp/config.hpp"
#include "epp/pipeline.hpp"
#include "epp/processor.hpp"

namespace epp {

enum class PlanMode { Main, NoWbc, NoCkpt, FullCkpt };

std::string to_string(PlanMode mode);
PlanMode plan_mode_from_string(const std::string& s);

/// Groups keyed by how many chunks their sequences were divided into.
struct ClassIndex {
    std::vector<std::vector<SequenceGroup>> by_count;  // [i] -> count i+1

    int max_count() const { return static_cast<int>(by_count.size()); }
};

/// Connected components of sequences that share chunks, classed by chunk
/// count. Shorts packed into a tail's hybrid chunk ride with that sequence.
ClassIndex build_class_index(const ChunkingResult& chunking);

struct PlannedUnit {
    PipelineUnit unit;
    std::vector<int> f2b;
    std::vector<int> ladder;
    double recompute_seconds = 0;
    double transition_cost = 0;  // delta + recompute
};

struct SchedulePlan {
    PlanMode mode = PlanMode::Main;
    int slices = 1;
    bool auto_slices = false;
    ChunkingResult chunking;
    std::vector<PlannedUnit> units;
    double delta = 0;
    double est_cost = 0;       // units * delta + total recompute
    double work_seconds = 0;   // per-stage forward+backward work of all chunks
    int candidates_tried = 0;
};

/// Contiguous-range partition DP. cost(a, b) prices scheduling classes
/// [a..b] (1-based, inclusive) as one pipeline; nullopt marks an infeasible
/// range. Returns nullopt when no full partition is feasible.
struct GroupingChoice {
    std::vector<std::pair<int, int>> ranges;
    double total = 0;
};
std::optional<GroupingChoice> optimal_grouping(
    int num_classes,
    const std::function<std::optional<double>(int, int)>& cost);

/// Reuses checkpoint solutions for structurally identical units across the
/// slice-count sweep; created and owned by make_plan.
struct TransitionCache;

/// Prices and checkpoints every candidate class range (the independent MILP
/// subproblems run on an OpenMP worker pool when jobs > 1, and serially,
/// with identical results, otherwise), then picks the optimal partition.
struct GroupSequencesResult {
    std::vector<PlannedUnit> units;
    double cost = 0;  // sum of transition costs
};
std::optional<GroupSequencesResult> group_sequences(
    const ClassIndex& index, const SystemConfig& config, double delta,
    PlanMode mode, int jobs, double* min_deficit_bytes = nullptr,
    TransitionCache* cache = nullptr);

/// Full planning entry point: sweeps candidate slice counts (auto mode),
/// chunks the batch, groups and checkpoints, returns the cheapest plan.
SchedulePlan make_plan(const std::vector<long long>& lengths,
                       std::optional<int> slices, const SystemConfig& config,
                       PlanMode mode = PlanMode::Main, int jobs = 1);

/// Simulates every unit of a plan with its checkpoint assignment.
std::vector<SimTrace> simulate_plan(const SchedulePlan& plan,
                                    const SystemConfig& config);

double plan_simulated_seconds(const std::vector<SimTrace>& traces);

}  // namespace epp

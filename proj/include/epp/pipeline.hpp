// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "epp/chunk.hpp"
#include "epp/config.hpp"
#include "epp/cost_model.hpp"

namespace epp {

/// A schedulable bundle: the sequences that must travel together because
/// they share chunks (a split long sequence plus anything packed into its
/// tail, or the whole content of one batched chunk).
struct SequenceGroup {
    int lead_seq = -1;
    std::vector<int> seq_ids;
    std::vector<Chunk> chunks;  // slice order
    long long tokens = 0;
};

/// One 1F1B pipeline: chunks in forward order, longest groups first.
struct PipelineUnit {
    std::vector<Chunk> chunks;
    int n_prefill = 1;          // chunk count of the deepest member group
    std::vector<int> sequences;

    int size() const { return static_cast<int>(chunks.size()); }
};

/// Sorts groups by descending chunk count (ties: descending tokens, then
/// lead sequence id) and concatenates their chunks.
PipelineUnit order_chunks(std::vector<SequenceGroup> groups);

enum class EventKind { Forward, Backward, Recompute };

std::string to_string(EventKind kind);

struct SimEvent {
    int stage = 0;       // 1-based
    int chunk_id = -1;   // global chunk id
    int chunk_pos = -1;  // forward-order index within the unit
    EventKind kind = EventKind::Forward;
    double start = 0;
    double end = 0;
};

struct SimTrace {
    std::vector<SimEvent> events;
    double makespan = 0;
    double bubble_ratio = 0;
    std::vector<double> peak_memory;  // per stage, bytes
    std::vector<std::vector<std::pair<double, double>>> memory_series;
    std::vector<bool> capacity_violation;  // peak > device capacity
};

/// Per-(stage, chunk) checkpointed layer counts.
struct CkptMap {
    int stages = 0;
    int chunks = 0;
    std::vector<int> layers;  // [(stage-1) * chunks + pos]

    static CkptMap zero(int stages, int chunks) {
        CkptMap m;
        m.stages = stages;
        m.chunks = chunks;
        m.layers.assign(static_cast<size_t>(stages) * chunks, 0);
        return m;
    }
    int at(int stage, int pos) const {
        return layers[static_cast<size_t>(stage - 1) * chunks + pos];
    }
    int& at(int stage, int pos) {
        return layers[static_cast<size_t>(stage - 1) * chunks + pos];
    }
    bool all_zero() const {
        for (int l : layers)
            if (l != 0) return false;
        return true;
    }
};

/// Event-driven 1F1B simulation. Every stage runs its warmup forwards, then
/// strict one-forward-one-backward alternation, then drains backwards.
/// Backward order is fixed by a checkpoint-free dry pass (earliest-ready,
/// ties to the lowest forward index) so that checkpointing never reorders
/// the schedule. Stage memory is accounted with stage_total_bytes over the
/// live chunk set.
SimTrace simulate_unit(const PipelineUnit& unit, const CkptMap& ckpt,
                       const CostParams& params, const ClusterConfig& cluster,
                       const ModelConfig& model);

/// Chunk windows observed at every backward start of a dry run: per stage,
/// deduplicated sorted lists of forward-order indices, warmup and cooldown
/// included.
std::vector<std::vector<std::vector<int>>> enumerate_windows(
    const PipelineUnit& unit, const CostParams& params,
    const ClusterConfig& cluster, const ModelConfig& model);

/// Position of each chunk (forward order) in the dry-run backward order.
std::vector<int> forward_to_backward_map(const PipelineUnit& unit,
                                         const CostParams& params,
                                         const ClusterConfig& cluster,
                                         const ModelConfig& model);

/// Fixed cost of opening and draining one pipeline: (pp_degree - 1) times the
/// mean combined forward+backward chunk time.
double warmup_cooldown_overhead(const std::vector<Chunk>& chunks,
                                const CostParams& params,
                                const ClusterConfig& cluster,
                                const ModelConfig& model);

/// Mean forward seconds per model layer over the unit's chunks.
double avg_layer_forward_seconds(const PipelineUnit& unit,
                                 const CostParams& params,
                                 const ClusterConfig& cluster,
                                 const ModelConfig& model);

namespace detail {

/// Full dry/replay engine output, exposed for the checkpoint planner.
struct ScheduleInfo {
    SimTrace trace;
    std::vector<std::vector<int>> backward_order;        // per stage
    std::vector<std::vector<std::vector<int>>> windows;  // per stage, per bwd
    std::vector<std::vector<bool>> steady;               // aligned with windows
    std::vector<std::vector<double>> window_bytes;       // aligned with windows
};

ScheduleInfo run_schedule(const PipelineUnit& unit, const CkptMap& ckpt,
                          const CostParams& params, const ClusterConfig& cluster,
                          const ModelConfig& model,
                          const std::vector<std::vector<int>>* fixed_order);

}  // namespace detail

}  // namespace epp

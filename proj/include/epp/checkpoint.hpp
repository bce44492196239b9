// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "epp/config.hpp"
#include "epp/milp.hpp"
#include "epp/pipeline.hpp"

namespace epp {

// Checkpointing decisions live on a ladder of n + pp_degree - 1 shared
// variables: the cell for chunk k (forward order) at stage p reads
// ladder[f2b[k] + pp_degree - p]. Cells on one pipeline anti-diagonal share
// a variable, so recompute fills the bubble a checkpointed backward would
// otherwise propagate to the neighbouring stages.

/// Ladder entry for (stage, chunk). `stage` is 1-based, `fwd_index` is the
/// chunk's forward-order position.
int expand_checkpoint(const std::vector<int>& ladder, int stage, int fwd_index,
                      const std::vector<int>& f2b, int pp_degree);

/// Materializes the full per-(stage, chunk) map from a ladder.
CkptMap ckpt_map_from_ladder(const std::vector<int>& ladder,
                             const std::vector<int>& f2b, int pp_degree,
                             int num_chunks);

struct MilpBuildOptions {
    // Subtract the max over stages of the model-state bytes instead of the
    // per-stage value.
    bool use_max_state_bytes = false;
};

/// One variable per ladder entry bounded by layers/pp_degree; one constraint
/// per (stage, window) demanding the window's activations fit beside the
/// stage's model states. Rows that cannot bind anywhere in the variable box
/// are dropped.
milp::MilpInstance build_memory_milp(
    const PipelineUnit& unit,
    const std::vector<std::vector<std::vector<int>>>& windows,
    const std::vector<int>& f2b, const ClusterConfig& cluster,
    const ModelConfig& model, const MilpBuildOptions& options = {});

struct CheckpointSolution {
    bool feasible = false;
    std::vector<int> ladder;
    double recompute_seconds = 0;  // mean layer forward time * sum(ladder)
    double memory_deficit = 0;     // bytes short of fitting, when infeasible
};

/// Minimal-recompute checkpointing for one unit. Infeasible units report the
/// largest per-constraint byte deficit at full checkpointing.
CheckpointSolution solve_checkpointing(
    const PipelineUnit& unit,
    const std::vector<std::vector<std::vector<int>>>& windows,
    const std::vector<int>& f2b, const CostParams& params,
    const ClusterConfig& cluster, const ModelConfig& model);

}  // namespace epp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "epp/chunk.hpp"
#include "epp/config.hpp"

namespace epp {

// All functions here are pure: same inputs give bit-identical outputs.
// Times are per pipeline stage, in seconds; memory is in bytes.

/// Computation time of one stage for a chunk. The quadratic term charges the
/// primary slice for attending to its causal context; packed slices attend
/// only within themselves.
double compute_time(const Chunk& chunk, Phase phase, const CostParams& params,
                    const ClusterConfig& cluster);

/// Per-stage all-to-all exchange time for sequence parallelism (four
/// exchanges per layer). Zero when sp_degree == 1.
double all2all_time(const Chunk& chunk, const ClusterConfig& cluster,
                    const ModelConfig& model);

double total_time(const Chunk& chunk, Phase phase, const CostParams& params,
                  const ClusterConfig& cluster, const ModelConfig& model);

/// Activation bytes a chunk keeps resident on one stage when ckpt_layers of
/// that stage's layers are checkpointed. Non-tail chunks additionally hold
/// key/value gradients until their own backward pass completes; checkpointed
/// layers still store inputs plus keys and values, which later chunks read.
double activation_bytes(const Chunk& chunk, int ckpt_layers,
                        const ClusterConfig& cluster, const ModelConfig& model);

/// Recomputation time added to a chunk's backward pass by ckpt_layers
/// checkpointed layers.
double recompute_time(const Chunk& chunk, int ckpt_layers,
                      const CostParams& params, const ClusterConfig& cluster,
                      const ModelConfig& model);

struct WindowEntry {
    const Chunk* chunk = nullptr;
    int ckpt_layers = 0;
};

/// Total bytes on stage `stage` (1-based): model states plus the activations
/// of every live chunk in `window`. Summation order follows `window`.
double stage_total_bytes(int stage, const std::vector<WindowEntry>& window,
                         const ClusterConfig& cluster, const ModelConfig& model);

/// activation_bytes(chunk, l) == intercept - slope * l  for every admissible l.
struct ActLinearization {
    double intercept = 0;  // bytes at zero checkpointing
    double slope = 0;      // bytes saved per checkpointed layer (may be < 0)
};

ActLinearization linearize_activation(const Chunk& chunk,
                                      const ClusterConfig& cluster,
                                      const ModelConfig& model);

struct FitSample {
    Chunk chunk;
    Phase phase = Phase::Forward;
    double seconds = 0;
};

struct FitResult {
    CostParams params;
    double fwd_residual = 0;  // L2 norm of forward residuals
    double bwd_residual = 0;
};

/// Least-squares fit of the per-phase coefficients from measured stage times.
/// Needs at least four samples per phase; throws FitError when the system is
/// rank-deficient.
FitResult fit_cost_params(const std::vector<FitSample>& samples,
                          const ClusterConfig& cluster);

}  // namespace epp

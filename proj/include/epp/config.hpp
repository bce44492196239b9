// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "epp/errors.hpp"

namespace epp {

/// Hardware description. all2all bandwidth/latency are keyed by the
/// sequence-parallel degree they were measured at.
struct ClusterConfig {
    int num_gpus = 1;
    int pp_degree = 1;
    int sp_degree = 1;
    double mem_capacity = 0;                  // bytes per device
    std::map<int, double> a2a_bandwidth;      // degree -> bytes/s
    std::map<int, double> a2a_latency;        // degree -> seconds

    void validate() const;
};

struct ModelConfig {
    int layers = 0;
    int hidden_dim = 0;
    double elem_bytes = 2;                    // bytes per element
    double token_act_bytes = 0;               // activation bytes per token,
                                              // whole model, unsharded
    std::vector<double> stage_state_bytes;    // model-state bytes per stage

    int layers_per_stage(const ClusterConfig& cluster) const {
        return layers / cluster.pp_degree;
    }

    void validate(const ClusterConfig& cluster) const;
};

struct PhaseCoeffs {
    double sec_per_token2 = 0;   // quadratic attention term
    double sec_per_token = 0;    // linear projection/FFN term
    double sec_fixed = 0;        // per-pass constant
};

struct CostParams {
    PhaseCoeffs forward;
    PhaseCoeffs backward;
    double layer_fwd_seconds = 0;  // optional profiled per-layer forward time;
                                   // the planner derives its own when 0

    const PhaseCoeffs& phase(bool is_backward) const {
        return is_backward ? backward : forward;
    }

    void validate() const;
};

/// The single configuration document: cluster + model + fitted coefficients.
struct SystemConfig {
    ClusterConfig cluster;
    ModelConfig model;
    CostParams cost;

    void validate() const;

    static SystemConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    static SystemConfig load(const std::string& path);
};

}  // namespace epp

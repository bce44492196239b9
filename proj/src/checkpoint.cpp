// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/checkpoint.hpp"

#include <algorithm>
#include <map>

namespace epp {

int expand_checkpoint(const std::vector<int>& ladder, int stage, int fwd_index,
                      const std::vector<int>& f2b, int pp_degree) {
    if (stage < 1 || stage > pp_degree) throw ContractError("stage out of range");
    if (fwd_index < 0 || fwd_index >= static_cast<int>(f2b.size()))
        throw ContractError("chunk index out of range");
    const int idx = f2b[fwd_index] + pp_degree - stage;
    if (idx < 0 || idx >= static_cast<int>(ladder.size()))
        throw ContractError("ladder index out of range");
    return ladder[idx];
}

CkptMap ckpt_map_from_ladder(const std::vector<int>& ladder,
                             const std::vector<int>& f2b, int pp_degree,
                             int num_chunks) {
    CkptMap map = CkptMap::zero(pp_degree, num_chunks);
    for (int p = 1; p <= pp_degree; ++p)
        for (int k = 0; k < num_chunks; ++k)
            map.at(p, k) = expand_checkpoint(ladder, p, k, f2b, pp_degree);
    return map;
}

namespace {

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
    // both sorted
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

milp::MilpInstance build_memory_milp(
    const PipelineUnit& unit,
    const std::vector<std::vector<std::vector<int>>>& windows,
    const std::vector<int>& f2b, const ClusterConfig& cluster,
    const ModelConfig& model, const MilpBuildOptions& options) {
    const int n = unit.size();
    const int dp = cluster.pp_degree;
    if (static_cast<int>(f2b.size()) != n)
        throw ContractError("f2b size mismatch");
    if (static_cast<int>(windows.size()) != dp)
        throw ContractError("windows must list every stage");

    milp::MilpInstance inst;
    inst.num_vars = n + dp - 1;
    inst.upper.assign(inst.num_vars, model.layers_per_stage(cluster));

    std::vector<ActLinearization> lin(n);
    for (int k = 0; k < n; ++k)
        lin[k] = linearize_activation(unit.chunks[k], cluster, model);

    double max_state = 0;
    for (double b : model.stage_state_bytes) max_state = std::max(max_state, b);

    for (int p = 1; p <= dp; ++p) {
        const double budget =
            cluster.mem_capacity -
            (options.use_max_state_bytes ? max_state
                                         : model.stage_state_bytes[p - 1]);

        // Windows contained in a larger window of the same stage cannot bind:
        // every chunk contributes non-negative bytes for any admissible
        // checkpoint choice.
        std::vector<const std::vector<int>*> maximal;
        for (const auto& w : windows[p - 1]) {
            bool dominated = false;
            for (const auto& other : windows[p - 1]) {
                if (&other == &w) continue;
                if (w.size() < other.size() && is_subset(w, other)) {
                    dominated = true;
                    break;
                }
                if (w.size() == other.size() && w == other && &other < &w) {
                    dominated = true;  // duplicate, keep the first
                    break;
                }
            }
            if (!dominated) maximal.push_back(&w);
        }

        for (const auto* w : maximal) {
            double intercept_sum = 0;
            std::map<int, double> coeffs;
            for (int k : *w) {
                intercept_sum += lin[k].intercept;
                coeffs[f2b[k] + dp - p] -= lin[k].slope;
            }
            const double rhs = budget - intercept_sum;
            bool can_bind = rhs < 0;
            for (const auto& [var, c] : coeffs)
                if (c > 0) can_bind = true;
            if (!can_bind) continue;

            milp::Constraint row;
            row.rhs = rhs;
            for (const auto& [var, c] : coeffs)
                if (c != 0.0) row.terms.emplace_back(var, c);
            inst.constraints.push_back(std::move(row));
        }
    }
    return inst;
}

CheckpointSolution solve_checkpointing(
    const PipelineUnit& unit,
    const std::vector<std::vector<std::vector<int>>>& windows,
    const std::vector<int>& f2b, const CostParams& params,
    const ClusterConfig& cluster, const ModelConfig& model) {
    const milp::MilpInstance inst =
        build_memory_milp(unit, windows, f2b, cluster, model);

    CheckpointSolution out;
    const std::vector<int> zeros(inst.num_vars, 0);
    if (milp::satisfies(inst, zeros)) {
        out.feasible = true;
        out.ladder = zeros;
        out.recompute_seconds = 0;
        return out;
    }

    const milp::SolveResult res = milp::solve(inst);
    if (res.status != milp::Status::Optimal) {
        out.feasible = false;
        // Deficit at the most memory-sparing corner of the variable box.
        double worst = 0;
        for (const milp::Constraint& c : inst.constraints) {
            double min_lhs = 0;
            for (const auto& [var, coeff] : c.terms)
                min_lhs += std::min(0.0, coeff * inst.upper[var]);
            worst = std::max(worst, min_lhs - c.rhs);
        }
        out.memory_deficit = worst;
        return out;
    }

    out.feasible = true;
    out.ladder = res.assignment.values;
    long long total_layers = 0;
    for (int v : out.ladder) total_layers += v;
    out.recompute_seconds =
        avg_layer_forward_seconds(unit, params, cluster, model) * total_layers;
    return out;
}

}  // namespace epp

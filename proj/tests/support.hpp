// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "epp/chunk.hpp"
#include "epp/config.hpp"
#include "epp/milp.hpp"
#include "epp/pipeline.hpp"

namespace epp::test {

struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    long long range(long long lo, long long hi) {  // inclusive
        return lo + static_cast<long long>(next() % static_cast<std::uint64_t>(
                                                        hi - lo + 1));
    }
};

inline ClusterConfig make_cluster(int dp, int ds, double mem = 1e12) {
    ClusterConfig c;
    c.pp_degree = dp;
    c.sp_degree = ds;
    c.num_gpus = dp * ds;
    c.mem_capacity = mem;
    if (ds > 1) {
        c.a2a_bandwidth[ds] = 1e11;
        c.a2a_latency[ds] = 1e-5;
    }
    return c;
}

inline ModelConfig make_model(int layers, int hidden, double token_bytes,
                              int dp, double state_bytes = 1e9) {
    ModelConfig m;
    m.layers = layers;
    m.hidden_dim = hidden;
    m.elem_bytes = 2;
    m.token_act_bytes = token_bytes;
    m.stage_state_bytes.assign(dp, state_bytes);
    return m;
}

inline CostParams make_params(double a1, double a2, double b1,
                              double bwd_scale = 2.0) {
    CostParams p;
    p.forward = {a1, a2, b1};
    p.backward = {a1 * bwd_scale, a2 * bwd_scale, b1 * bwd_scale};
    return p;
}

inline Chunk batched(std::vector<long long> slices, int id = 0) {
    Chunk c;
    c.id = id;
    c.kind = ChunkKind::Batched;
    c.slices = std::move(slices);
    c.tail = true;
    return c;
}

inline Chunk split(long long context, long long tokens, bool tail, int id = 0,
                   int seq = 0) {
    Chunk c;
    c.id = id;
    c.seq = seq;
    c.kind = ChunkKind::Split;
    c.context = context;
    c.slices = {tokens};
    c.tail = tail;
    return c;
}

inline Chunk random_chunk(Rng& rng, long long max_tokens = 20000) {
    Chunk c;
    const int pick = static_cast<int>(rng.range(0, 2));
    if (pick == 0) {
        c.kind = ChunkKind::Batched;
        c.tail = true;
        const int slices = static_cast<int>(rng.range(1, 5));
        for (int i = 0; i < slices; ++i)
            c.slices.push_back(rng.range(1, max_tokens));
    } else if (pick == 1) {
        c.kind = ChunkKind::Split;
        c.seq = 0;
        c.context = rng.range(1, 4 * max_tokens);
        c.slices = {rng.range(1, max_tokens)};
        c.tail = rng.range(0, 1) == 1;
    } else {
        c.kind = ChunkKind::Hybrid;
        c.seq = 0;
        c.context = rng.range(1, 4 * max_tokens);
        c.tail = true;
        const int slices = static_cast<int>(rng.range(2, 5));
        for (int i = 0; i < slices; ++i)
            c.slices.push_back(rng.range(1, max_tokens));
    }
    return c;
}

// Independent re-evaluation of the stage activation model, written
// per-token and regrouped so it does not share the production arithmetic.
inline double reference_activation_bytes(const Chunk& chunk, int ckpt_layers,
                                         const ClusterConfig& cluster,
                                         const ModelConfig& model) {
    const double tokens = static_cast<double>(chunk.tokens());
    const double live_fraction =
        1.0 - static_cast<double>(ckpt_layers) * cluster.pp_degree /
                  static_cast<double>(model.layers);
    double per_token = model.token_act_bytes / cluster.num_gpus * live_fraction;
    if (!chunk.tail)
        per_token += 2.0 * model.elem_bytes * model.layers * model.hidden_dim /
                     cluster.num_gpus;
    per_token += (chunk.tail ? 1.0 : 3.0) * model.elem_bytes * model.hidden_dim *
                 ckpt_layers / cluster.sp_degree;
    return per_token * tokens;
}

// Random unit built the way the planner builds them: groups ordered by
// descending chunk count. Sequences split into `depth` chunks plus packed
// singletons.
inline PipelineUnit random_unit(Rng& rng, int max_depth = 4,
                                int max_groups = 6,
                                long long max_tokens = 8000) {
    std::vector<SequenceGroup> groups;
    const int num_groups = static_cast<int>(rng.range(1, max_groups));
    int next_seq = 0;
    int next_id = 0;
    for (int g = 0; g < num_groups; ++g) {
        SequenceGroup group;
        group.lead_seq = next_seq++;
        group.seq_ids = {group.lead_seq};
        const int depth = static_cast<int>(rng.range(1, max_depth));
        if (depth == 1) {
            Chunk c = batched({rng.range(1, max_tokens)}, next_id++);
            group.tokens = c.tokens();
            group.chunks.push_back(std::move(c));
        } else {
            long long context = 0;
            for (int d = 0; d < depth; ++d) {
                const long long tokens = rng.range(1, max_tokens);
                Chunk c = split(context, tokens, d + 1 == depth, next_id++,
                                group.lead_seq);
                if (d == 0) {
                    c.context = 0;
                    c.kind = ChunkKind::Split;
                }
                context += tokens;
                group.tokens += tokens;
                group.chunks.push_back(std::move(c));
            }
        }
        groups.push_back(std::move(group));
    }
    return order_chunks(std::move(groups));
}

inline milp::MilpInstance random_instance(Rng& rng, int max_vars = 6,
                                          int max_bound = 4) {
    milp::MilpInstance inst;
    inst.num_vars = static_cast<int>(rng.range(1, max_vars));
    for (int i = 0; i < inst.num_vars; ++i)
        inst.upper.push_back(static_cast<int>(rng.range(0, max_bound)));
    const int rows = static_cast<int>(rng.range(1, 5));
    for (int r = 0; r < rows; ++r) {
        milp::Constraint c;
        const int terms = static_cast<int>(rng.range(1, inst.num_vars));
        std::vector<int> vars(inst.num_vars);
        for (int i = 0; i < inst.num_vars; ++i) vars[i] = i;
        for (int t = 0; t < terms; ++t) {
            const size_t at = static_cast<size_t>(rng.range(0, inst.num_vars - 1 - t));
            const int var = vars[at];
            std::swap(vars[at], vars[inst.num_vars - 1 - t]);
            const double coeff = std::round((rng.real() * 10.0 - 5.0) * 100) / 100;
            if (coeff != 0.0) c.terms.emplace_back(var, coeff);
        }
        std::sort(c.terms.begin(), c.terms.end());
        c.rhs = std::round((rng.real() * 16.0 - 6.0) * 100) / 100;
        inst.constraints.push_back(std::move(c));
    }
    return inst;
}

}  // namespace epp::test

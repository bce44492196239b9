// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/cost_model.hpp"

#include <array>
#include <cmath>
#include <set>

namespace epp {

double compute_time(const Chunk& chunk, Phase phase, const CostParams& params,
                    const ClusterConfig& cluster) {
    const PhaseCoeffs& c = params.phase(phase == Phase::Backward);
    const double ctx = static_cast<double>(chunk.context);
    const double primary = static_cast<double>(chunk.slices.front());

    double work = c.sec_per_token2 * ((ctx + primary) * (ctx + primary) - ctx * ctx) +
                  c.sec_per_token * primary;
    for (size_t i = 1; i < chunk.slices.size(); ++i) {
        const double s = static_cast<double>(chunk.slices[i]);
        work += c.sec_per_token2 * s * s + c.sec_per_token * s;
    }
    return work / cluster.num_gpus + c.sec_fixed / cluster.pp_degree;
}

double all2all_time(const Chunk& chunk, const ClusterConfig& cluster,
                    const ModelConfig& model) {
    if (cluster.sp_degree == 1) return 0.0;
    const auto bw = cluster.a2a_bandwidth.find(cluster.sp_degree);
    const auto lat = cluster.a2a_latency.find(cluster.sp_degree);
    if (bw == cluster.a2a_bandwidth.end() || lat == cluster.a2a_latency.end())
        throw ConfigError("no all2all bandwidth/latency entry for sp_degree " +
                          std::to_string(cluster.sp_degree));
    const double volume = model.elem_bytes * model.hidden_dim *
                          static_cast<double>(chunk.tokens());
    const double per_layer = volume / (cluster.sp_degree * bw->second) + lat->second;
    return per_layer * 4.0 * model.layers / cluster.pp_degree;
}

double total_time(const Chunk& chunk, Phase phase, const CostParams& params,
                  const ClusterConfig& cluster, const ModelConfig& model) {
    return compute_time(chunk, phase, params, cluster) +
           all2all_time(chunk, cluster, model);
}

double activation_bytes(const Chunk& chunk, int ckpt_layers,
                        const ClusterConfig& cluster, const ModelConfig& model) {
    const int per_stage = model.layers_per_stage(cluster);
    if (ckpt_layers < 0 || ckpt_layers > per_stage)
        throw ContractError("ckpt_layers out of [0, layers/pp_degree]");

    const double tokens = static_cast<double>(chunk.tokens());
    const double tail = chunk.tail ? 1.0 : 0.0;
    const double layers = model.layers;

    const double act = (layers - ckpt_layers * cluster.pp_degree) / layers *
                       (model.token_act_bytes / cluster.num_gpus) * tokens;
    const double dkv = (1.0 - tail) *
                       (2.0 * model.elem_bytes * layers * model.hidden_dim /
                        cluster.num_gpus) *
                       tokens;
    const double ckpt = (3.0 - 2.0 * tail) * model.elem_bytes * model.hidden_dim *
                        ckpt_layers / cluster.sp_degree * tokens;
    return act + dkv + ckpt;
}

double recompute_time(const Chunk& chunk, int ckpt_layers,
                      const CostParams& params, const ClusterConfig& cluster,
                      const ModelConfig& model) {
    const int per_stage = model.layers_per_stage(cluster);
    if (ckpt_layers < 0 || ckpt_layers > per_stage)
        throw ContractError("ckpt_layers out of [0, layers/pp_degree]");
    if (ckpt_layers == 0) return 0.0;
    return static_cast<double>(ckpt_layers) /
           (static_cast<double>(model.layers) * cluster.sp_degree) *
           total_time(chunk, Phase::Forward, params, cluster, model);
}

double stage_total_bytes(int stage, const std::vector<WindowEntry>& window,
                         const ClusterConfig& cluster, const ModelConfig& model) {
    if (stage < 1 || stage > cluster.pp_degree)
        throw ContractError("stage index out of range");
    double total = model.stage_state_bytes[stage - 1];
    for (const WindowEntry& e : window)
        total += activation_bytes(*e.chunk, e.ckpt_layers, cluster, model);
    return total;
}

ActLinearization linearize_activation(const Chunk& chunk,
                                      const ClusterConfig& cluster,
                                      const ModelConfig& model) {
    const double tokens = static_cast<double>(chunk.tokens());
    const double tail = chunk.tail ? 1.0 : 0.0;
    const double w = 3.0 - 2.0 * tail;

    ActLinearization lin;
    lin.intercept = model.token_act_bytes / cluster.num_gpus * tokens +
                    (1.0 - tail) *
                        (2.0 * model.elem_bytes * model.layers * model.hidden_dim /
                         cluster.num_gpus) *
                        tokens;
    lin.slope = (model.token_act_bytes / (static_cast<double>(model.layers) *
                                          cluster.sp_degree) -
                 model.elem_bytes * model.hidden_dim * w / cluster.sp_degree) *
                tokens;
    return lin;
}

namespace {

// Solves the 3x3 normal equations with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        double scale = 0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) scale = std::max(scale, std::fabs(m[r][c]));
        if (std::fabs(m[col][col]) <= 1e-12 * std::max(1.0, scale))
            throw FitError("rank-deficient sample set");
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::array<double, 3> x{};
    for (int r = 2; r >= 0; --r) {
        double v = m[r][3];
        for (int c = r + 1; c < 3; ++c) v -= m[r][c] * x[c];
        x[r] = v / m[r][r];
    }
    return x;
}

struct PhaseFit {
    PhaseCoeffs coeffs;
    double residual = 0;
};

PhaseFit fit_phase(const std::vector<const FitSample*>& samples,
                   const ClusterConfig& cluster) {
    if (samples.size() < 4)
        throw FitError("need at least 4 samples per phase, got " +
                       std::to_string(samples.size()));
    std::set<long long> distinct;
    for (const FitSample* s : samples) distinct.insert(s->chunk.tokens());
    if (distinct.size() < 2)
        throw FitError("samples need distinct slice lengths");

    // Features: quadratic token work / N, linear token count / N, 1 / pp.
    std::vector<std::array<double, 3>> rows;
    rows.reserve(samples.size());
    for (const FitSample* s : samples) {
        const Chunk& ch = s->chunk;
        const double ctx = static_cast<double>(ch.context);
        const double primary = static_cast<double>(ch.slices.front());
        double quad = (ctx + primary) * (ctx + primary) - ctx * ctx;
        for (size_t i = 1; i < ch.slices.size(); ++i) {
            const double sl = static_cast<double>(ch.slices[i]);
            quad += sl * sl;
        }
        rows.push_back({quad / cluster.num_gpus,
                        static_cast<double>(ch.tokens()) / cluster.num_gpus,
                        1.0 / cluster.pp_degree});
    }

    // The features span many orders of magnitude; normalize columns so the
    // normal equations stay well conditioned.
    std::array<double, 3> col_scale = {0, 0, 0};
    for (const auto& row : rows)
        for (int j = 0; j < 3; ++j)
            col_scale[j] = std::max(col_scale[j], std::fabs(row[j]));
    for (double sc : col_scale)
        if (sc == 0) throw FitError("rank-deficient sample set");

    std::array<std::array<double, 4>, 3> normal{};
    for (size_t r = 0; r < rows.size(); ++r) {
        std::array<double, 3> row = rows[r];
        for (int j = 0; j < 3; ++j) row[j] /= col_scale[j];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) normal[i][j] += row[i] * row[j];
            normal[i][3] += row[i] * samples[r]->seconds;
        }
    }
    auto x = solve3(normal);
    for (int j = 0; j < 3; ++j) x[j] /= col_scale[j];

    PhaseFit fit;
    fit.coeffs.sec_per_token2 = x[0];
    fit.coeffs.sec_per_token = x[1];
    fit.coeffs.sec_fixed = x[2];
    double ss = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double pred =
            rows[i][0] * x[0] + rows[i][1] * x[1] + rows[i][2] * x[2];
        const double r = samples[i]->seconds - pred;
        ss += r * r;
    }
    fit.residual = std::sqrt(ss);
    return fit;
}

}  // namespace

FitResult fit_cost_params(const std::vector<FitSample>& samples,
                          const ClusterConfig& cluster) {
    std::vector<const FitSample*> fwd, bwd;
    for (const FitSample& s : samples)
        (s.phase == Phase::Forward ? fwd : bwd).push_back(&s);

    const PhaseFit f = fit_phase(fwd, cluster);
    const PhaseFit b = fit_phase(bwd, cluster);

    FitResult result;
    result.params.forward = f.coeffs;
    result.params.backward = b.coeffs;
    result.fwd_residual = f.residual;
    result.bwd_residual = b.residual;
    return result;
}

}  // namespace epp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace epp {

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Forward: return "F";
        case EventKind::Backward: return "B";
        case EventKind::Recompute: return "R";
    }
    return "?";
}

PipelineUnit order_chunks(std::vector<SequenceGroup> groups) {
    std::sort(groups.begin(), groups.end(),
              [](const SequenceGroup& a, const SequenceGroup& b) {
                  if (a.chunks.size() != b.chunks.size())
                      return a.chunks.size() > b.chunks.size();
                  if (a.tokens != b.tokens) return a.tokens > b.tokens;
                  return a.lead_seq < b.lead_seq;
              });
    PipelineUnit unit;
    for (const SequenceGroup& g : groups) {
        unit.n_prefill = std::max(unit.n_prefill,
                                  static_cast<int>(g.chunks.size()));
        for (const Chunk& c : g.chunks) unit.chunks.push_back(c);
        for (int s : g.seq_ids) unit.sequences.push_back(s);
    }
    if (unit.chunks.empty()) unit.n_prefill = 0;
    return unit;
}

double warmup_cooldown_overhead(const std::vector<Chunk>& chunks,
                                const CostParams& params,
                                const ClusterConfig& cluster,
                                const ModelConfig& model) {
    if (chunks.empty()) throw ContractError("overhead of an empty chunk list");
    double sum = 0;
    for (const Chunk& c : chunks)
        sum += total_time(c, Phase::Forward, params, cluster, model) +
               total_time(c, Phase::Backward, params, cluster, model);
    return (cluster.pp_degree - 1) * (sum / static_cast<double>(chunks.size()));
}

double avg_layer_forward_seconds(const PipelineUnit& unit,
                                 const CostParams& params,
                                 const ClusterConfig& cluster,
                                 const ModelConfig& model) {
    if (unit.chunks.empty()) throw ContractError("empty pipeline unit");
    const double per_stage_layers = model.layers_per_stage(cluster);
    double sum = 0;
    for (const Chunk& c : unit.chunks)
        sum += total_time(c, Phase::Forward, params, cluster, model) /
               per_stage_layers;
    return sum / static_cast<double>(unit.chunks.size());
}

namespace detail {

namespace {

constexpr double kUnset = -1.0;

struct StageState {
    int warmup = 0;
    int fwd_issued = 0;
    int bwd_issued = 0;
    double free_at = 0;
    std::vector<bool> fwd_done;
    std::vector<bool> bwd_done;
    std::vector<double> fwd_end;
    std::vector<double> bwd_end;
    std::set<int> live;  // chunks with forward started, backward unfinished
};

enum class OpKind { Fwd, Bwd };

struct Candidate {
    bool available = false;
    double start = std::numeric_limits<double>::infinity();
    OpKind kind = OpKind::Fwd;
    int chunk = -1;
};

}  // namespace

ScheduleInfo run_schedule(const PipelineUnit& unit, const CkptMap& ckpt,
                          const CostParams& params, const ClusterConfig& cluster,
                          const ModelConfig& model,
                          const std::vector<std::vector<int>>* fixed_order) {
    const int n = unit.size();
    const int dp = cluster.pp_degree;
    if (n == 0) throw ContractError("cannot simulate an empty unit");
    if (ckpt.stages != dp || ckpt.chunks != n)
        throw ContractError("checkpoint map shape mismatch");
    const int per_stage_layers = model.layers_per_stage(cluster);
    for (int l : ckpt.layers)
        if (l < 0 || l > per_stage_layers)
            throw ContractError("checkpoint layers out of range");

    std::vector<double> fwd_dur(n), bwd_dur(n), layer_fwd(n);
    for (int k = 0; k < n; ++k) {
        fwd_dur[k] = total_time(unit.chunks[k], Phase::Forward, params, cluster,
                                model);
        bwd_dur[k] = total_time(unit.chunks[k], Phase::Backward, params, cluster,
                                model);
        layer_fwd[k] = fwd_dur[k] / per_stage_layers;
    }

    // Intra-sequence slice chain: a non-tail chunk's backward waits for the
    // next slice of the same sequence.
    std::vector<int> succ(n, -1);
    {
        std::map<int, int> last_of_seq;
        for (int k = 0; k < n; ++k) {
            if (!unit.chunks[k].seq.has_value()) continue;
            auto it = last_of_seq.find(*unit.chunks[k].seq);
            if (it != last_of_seq.end() && !unit.chunks[it->second].tail)
                succ[it->second] = k;
            last_of_seq[*unit.chunks[k].seq] = k;
        }
    }

    std::vector<StageState> st(dp);
    for (int p = 0; p < dp; ++p) {
        st[p].warmup = std::min(dp - (p + 1) + unit.n_prefill - 1, n);
        st[p].fwd_done.assign(n, false);
        st[p].bwd_done.assign(n, false);
        st[p].fwd_end.assign(n, kUnset);
        st[p].bwd_end.assign(n, kUnset);
    }

    ScheduleInfo info;
    info.backward_order.assign(dp, {});
    info.windows.assign(dp, {});
    info.steady.assign(dp, {});
    info.window_bytes.assign(dp, {});
    info.trace.memory_series.assign(dp, {});
    info.trace.peak_memory.assign(dp, 0.0);
    info.trace.capacity_violation.assign(dp, false);

    auto record_memory = [&](int p, double t) -> double {
        std::vector<WindowEntry> entries;
        entries.reserve(st[p].live.size());
        for (int k : st[p].live)
            entries.push_back({&unit.chunks[k], ckpt.at(p + 1, k)});
        const double bytes = stage_total_bytes(p + 1, entries, cluster, model);
        info.trace.memory_series[p].emplace_back(t, bytes);
        return bytes;
    };
    for (int p = 0; p < dp; ++p) record_memory(p, 0.0);

    auto next_kind = [&](const StageState& s) -> OpKind {
        if (s.fwd_issued < s.warmup) return OpKind::Fwd;
        if (s.fwd_issued < n && s.fwd_issued - s.warmup == s.bwd_issued)
            return OpKind::Fwd;
        return OpKind::Bwd;
    };

    auto bwd_candidate = [&](int p, int k) -> Candidate {
        const StageState& s = st[p];
        if (!s.fwd_done[k]) return {};
        double start = std::max(s.free_at, s.fwd_end[k]);
        if (p + 1 < dp) {
            if (!st[p + 1].bwd_done[k]) return {};
            start = std::max(start, st[p + 1].bwd_end[k]);
        }
        if (succ[k] >= 0) {
            if (!s.bwd_done[succ[k]]) return {};
            start = std::max(start, s.bwd_end[succ[k]]);
        }
        return {true, start, OpKind::Bwd, k};
    };

    auto stage_candidate = [&](int p) -> Candidate {
        const StageState& s = st[p];
        if (s.fwd_issued == n && s.bwd_issued == n) return {};
        if (next_kind(s) == OpKind::Fwd) {
            const int k = s.fwd_issued;
            double start = s.free_at;
            if (p > 0) {
                if (!st[p - 1].fwd_done[k]) return {};
                start = std::max(start, st[p - 1].fwd_end[k]);
            }
            return {true, start, OpKind::Fwd, k};
        }
        if (fixed_order) {
            const int k = (*fixed_order)[p][s.bwd_issued];
            return bwd_candidate(p, k);
        }
        Candidate best;
        for (int k = 0; k < n; ++k) {
            if (s.bwd_done[k]) continue;
            const Candidate c = bwd_candidate(p, k);
            if (!c.available) continue;
            if (!best.available || c.start < best.start - 1e-15) best = c;
        }
        return best;
    };

    const long long total_ops = 2LL * n * dp;
    for (long long done = 0; done < total_ops; ++done) {
        int pick = -1;
        Candidate best;
        for (int p = 0; p < dp; ++p) {
            const Candidate c = stage_candidate(p);
            if (!c.available) continue;
            if (pick < 0 || c.start < best.start - 1e-15) {
                pick = p;
                best = c;
            }
        }
        if (pick < 0)
            throw Error("pipeline schedule deadlock: no runnable work");

        StageState& s = st[pick];
        const int k = best.chunk;
        if (best.kind == OpKind::Fwd) {
            const double end = best.start + fwd_dur[k];
            info.trace.events.push_back({pick + 1, unit.chunks[k].id, k,
                                         EventKind::Forward, best.start, end});
            s.fwd_done[k] = true;
            s.fwd_end[k] = end;
            s.free_at = end;
            ++s.fwd_issued;
            s.live.insert(k);
            record_memory(pick, best.start);
        } else {
            // Window observed as this backward begins; the chunk itself is
            // still resident.
            std::vector<int> window(s.live.begin(), s.live.end());
            info.windows[pick].push_back(window);
            const bool full_warmup =
                s.warmup == dp - (pick + 1) + unit.n_prefill - 1;
            info.steady[pick].push_back(full_warmup &&
                                        s.bwd_issued < n - s.warmup);
            info.backward_order[pick].push_back(k);
            info.window_bytes[pick].push_back(record_memory(pick, best.start));

            double t = best.start;
            const double rec_seconds = ckpt.at(pick + 1, k) * layer_fwd[k];
            if (rec_seconds > 0) {
                info.trace.events.push_back({pick + 1, unit.chunks[k].id, k,
                                             EventKind::Recompute, t,
                                             t + rec_seconds});
                t += rec_seconds;
            }
            const double end = t + bwd_dur[k];
            info.trace.events.push_back({pick + 1, unit.chunks[k].id, k,
                                         EventKind::Backward, t, end});
            s.bwd_done[k] = true;
            s.bwd_end[k] = end;
            s.free_at = end;
            ++s.bwd_issued;
            s.live.erase(k);
            record_memory(pick, end);
        }
    }

    std::sort(info.trace.events.begin(), info.trace.events.end(),
              [](const SimEvent& a, const SimEvent& b) {
                  if (a.start != b.start) return a.start < b.start;
                  if (a.stage != b.stage) return a.stage < b.stage;
                  return a.chunk_pos < b.chunk_pos;
              });

    double makespan = 0;
    std::vector<double> busy(dp, 0.0);
    for (const SimEvent& e : info.trace.events) {
        makespan = std::max(makespan, e.end);
        busy[e.stage - 1] += e.end - e.start;
    }
    info.trace.makespan = makespan;
    double busy_sum = 0;
    for (double b : busy) busy_sum += b;
    info.trace.bubble_ratio =
        makespan > 0 ? 1.0 - busy_sum / (dp * makespan) : 0.0;

    for (int p = 0; p < dp; ++p) {
        double peak = 0;
        for (const auto& [t, bytes] : info.trace.memory_series[p])
            peak = std::max(peak, bytes);
        info.trace.peak_memory[p] = peak;
        info.trace.capacity_violation[p] = peak > cluster.mem_capacity;
    }

    return info;
}

}  // namespace detail

SimTrace simulate_unit(const PipelineUnit& unit, const CkptMap& ckpt,
                       const CostParams& params, const ClusterConfig& cluster,
                       const ModelConfig& model) {
    const CkptMap zero = CkptMap::zero(cluster.pp_degree, unit.size());
    detail::ScheduleInfo dry =
        detail::run_schedule(unit, zero, params, cluster, model, nullptr);
    if (ckpt.all_zero()) return dry.trace;
    detail::ScheduleInfo out = detail::run_schedule(
        unit, ckpt, params, cluster, model, &dry.backward_order);
    return out.trace;
}

std::vector<std::vector<std::vector<int>>> enumerate_windows(
    const PipelineUnit& unit, const CostParams& params,
    const ClusterConfig& cluster, const ModelConfig& model) {
    const CkptMap zero = CkptMap::zero(cluster.pp_degree, unit.size());
    detail::ScheduleInfo dry =
        detail::run_schedule(unit, zero, params, cluster, model, nullptr);
    std::vector<std::vector<std::vector<int>>> out(dry.windows.size());
    for (size_t p = 0; p < dry.windows.size(); ++p) {
        for (const auto& w : dry.windows[p])
            if (std::find(out[p].begin(), out[p].end(), w) == out[p].end())
                out[p].push_back(w);
    }
    return out;
}

std::vector<int> forward_to_backward_map(const PipelineUnit& unit,
                                         const CostParams& params,
                                         const ClusterConfig& cluster,
                                         const ModelConfig& model) {
    const CkptMap zero = CkptMap::zero(cluster.pp_degree, unit.size());
    detail::ScheduleInfo dry =
        detail::run_schedule(unit, zero, params, cluster, model, nullptr);
    const std::vector<int>& order = dry.backward_order.back();
    for (const auto& other : dry.backward_order)
        if (other != order)
            throw Error("backward order diverged across stages");
    std::vector<int> f2b(unit.size(), -1);
    for (size_t pos = 0; pos < order.size(); ++pos) f2b[order[pos]] = int(pos);
    return f2b;
}

}  // namespace epp

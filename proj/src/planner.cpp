// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/planner.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace epp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(PlanMode mode) {
    switch (mode) {
        case PlanMode::Main: return "main";
        case PlanMode::NoWbc: return "no_wbc";
        case PlanMode::NoCkpt: return "no_ckpt";
        case PlanMode::FullCkpt: return "full_ckpt";
    }
    return "?";
}

PlanMode plan_mode_from_string(const std::string& s) {
    if (s == "main") return PlanMode::Main;
    if (s == "no_wbc") return PlanMode::NoWbc;
    if (s == "no_ckpt") return PlanMode::NoCkpt;
    if (s == "full_ckpt") return PlanMode::FullCkpt;
    throw ParseError("unknown plan mode: " + s);
}

ClassIndex build_class_index(const ChunkingResult& chunking) {
    const int num_seqs = static_cast<int>(chunking.per_sequence.size());

    // Union sequences that share a chunk.
    std::vector<int> parent(num_seqs);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::map<int, int> chunk_owner;
    for (int seq = 0; seq < num_seqs; ++seq) {
        for (int cid : chunking.per_sequence[seq]) {
            auto [it, inserted] = chunk_owner.emplace(cid, seq);
            if (!inserted) parent[find(seq)] = find(it->second);
        }
    }

    std::map<int, SequenceGroup> groups;  // root -> group
    for (int seq = 0; seq < num_seqs; ++seq) {
        SequenceGroup& g = groups[find(seq)];
        g.seq_ids.push_back(seq);
    }
    for (auto& [root, g] : groups) {
        // The spine is the member with the most chunks; its per-sequence
        // list is already in slice order and covers the whole group.
        int spine = g.seq_ids.front();
        for (int seq : g.seq_ids)
            if (chunking.per_sequence[seq].size() >
                chunking.per_sequence[spine].size())
                spine = seq;
        g.lead_seq = spine;
        for (int cid : chunking.per_sequence[spine]) {
            g.chunks.push_back(chunking.chunks[cid]);
            g.tokens += chunking.chunks[cid].tokens();
        }
    }

    ClassIndex index;
    for (auto& [root, g] : groups) {
        const int count = static_cast<int>(g.chunks.size());
        if (count > index.max_count())
            index.by_count.resize(count);
        index.by_count[count - 1].push_back(std::move(g));
    }
    // Deterministic order inside each class.
    for (auto& cls : index.by_count)
        std::sort(cls.begin(), cls.end(),
                  [](const SequenceGroup& a, const SequenceGroup& b) {
                      if (a.tokens != b.tokens) return a.tokens > b.tokens;
                      return a.lead_seq < b.lead_seq;
                  });
    return index;
}

std::optional<GroupingChoice> optimal_grouping(
    int num_classes,
    const std::function<std::optional<double>(int, int)>& cost) {
    std::vector<double> dp(num_classes + 1, kInf);
    std::vector<int> prev(num_classes + 1, -1);
    dp[0] = 0;
    for (int i = 1; i <= num_classes; ++i) {
        for (int k = 0; k < i; ++k) {
            if (dp[k] == kInf) continue;
            const auto c = cost(k + 1, i);
            if (!c.has_value()) continue;
            if (dp[k] + *c < dp[i]) {
                dp[i] = dp[k] + *c;
                prev[i] = k;
            }
        }
    }
    if (dp[num_classes] == kInf) return std::nullopt;

    GroupingChoice out;
    out.total = dp[num_classes];
    int i = num_classes;
    while (i > 0) {
        out.ranges.emplace_back(prev[i] + 1, i);
        i = prev[i];
    }
    std::reverse(out.ranges.begin(), out.ranges.end());
    return out;
}

namespace {

struct TransitionOutcome {
    bool evaluated = false;
    bool feasible = false;
    PlannedUnit unit;
    double cost = 0;
    double deficit = 0;
    bool empty_range = false;
    std::string error;
};

std::string unit_signature(const std::vector<SequenceGroup>& groups,
                           PlanMode mode) {
    std::ostringstream sig;
    sig << to_string(mode);
    for (const SequenceGroup& g : groups) {
        sig << "/g";
        for (const Chunk& c : g.chunks) {
            sig << '|' << static_cast<int>(c.kind) << ':' << c.context << ':'
                << (c.tail ? 1 : 0) << ':';
            for (long long s : c.slices) sig << s << ',';
        }
    }
    return sig.str();
}

TransitionOutcome solve_transition(std::vector<SequenceGroup> groups,
                                   const SystemConfig& config, double delta,
                                   PlanMode mode) {
    TransitionOutcome out;
    out.evaluated = true;
    if (groups.empty()) {
        out.feasible = true;
        out.empty_range = true;
        out.cost = 0;
        return out;
    }
    const ClusterConfig& cluster = config.cluster;
    const ModelConfig& model = config.model;
    const CostParams& params = config.cost;

    PipelineUnit unit = order_chunks(std::move(groups));
    const CkptMap zero = CkptMap::zero(cluster.pp_degree, unit.size());
    detail::ScheduleInfo dry =
        detail::run_schedule(unit, zero, params, cluster, model, nullptr);

    const std::vector<int>& order = dry.backward_order.back();
    for (const auto& other : dry.backward_order)
        if (other != order) throw Error("backward order diverged across stages");
    std::vector<int> f2b(unit.size(), -1);
    for (size_t pos = 0; pos < order.size(); ++pos)
        f2b[order[pos]] = static_cast<int>(pos);

    std::vector<std::vector<std::vector<int>>> windows(cluster.pp_degree);
    for (int p = 0; p < cluster.pp_degree; ++p)
        for (const auto& w : dry.windows[p])
            if (std::find(windows[p].begin(), windows[p].end(), w) ==
                windows[p].end())
                windows[p].push_back(w);

    const int full_layers = model.layers_per_stage(cluster);
    if (mode == PlanMode::Main) {
        CheckpointSolution sol =
            solve_checkpointing(unit, windows, f2b, params, cluster, model);
        if (!sol.feasible) {
            out.deficit = sol.memory_deficit;
            return out;
        }
        out.feasible = true;
        out.unit = {std::move(unit), std::move(f2b), std::move(sol.ladder),
                    sol.recompute_seconds, delta + sol.recompute_seconds};
        out.cost = out.unit.transition_cost;
        return out;
    }

    const milp::MilpInstance inst =
        build_memory_milp(unit, windows, f2b, cluster, model);
    std::vector<int> ladder(inst.num_vars,
                            mode == PlanMode::FullCkpt ? full_layers : 0);
    if (!milp::satisfies(inst, ladder)) {
        double worst = 0;
        for (const milp::Constraint& c : inst.constraints) {
            double lhs = 0;
            for (const auto& [var, coeff] : c.terms) lhs += coeff * ladder[var];
            worst = std::max(worst, lhs - c.rhs);
        }
        out.deficit = worst;
        return out;
    }
    double rec = 0;
    if (mode == PlanMode::FullCkpt) {
        long long total_layers = 0;
        for (int v : ladder) total_layers += v;
        rec = avg_layer_forward_seconds(unit, params, cluster, model) *
              total_layers;
    }
    out.feasible = true;
    out.unit = {std::move(unit), std::move(f2b), std::move(ladder), rec,
                delta + rec};
    out.cost = out.unit.transition_cost;
    return out;
}

}  // namespace

struct TransitionCache {
    std::map<std::string, TransitionOutcome> entries;
};

std::optional<GroupSequencesResult> group_sequences(
    const ClassIndex& index, const SystemConfig& config, double delta,
    PlanMode mode, int jobs, double* min_deficit_bytes,
    TransitionCache* cache) {
    const int num_classes = index.max_count();
    if (num_classes == 0) return std::nullopt;

    struct Task {
        int a, b;
        std::vector<SequenceGroup> groups;
        std::string signature;
        bool cached = false;
    };
    std::vector<Task> tasks;
    for (int a = 1; a <= num_classes; ++a) {
        for (int b = a; b <= num_classes; ++b) {
            Task t{a, b, {}, {}, false};
            for (int cls = a; cls <= b; ++cls)
                for (const SequenceGroup& g : index.by_count[cls - 1])
                    t.groups.push_back(g);
            tasks.push_back(std::move(t));
        }
    }

    std::vector<TransitionOutcome> outcomes(tasks.size());
    if (cache) {
        for (size_t t = 0; t < tasks.size(); ++t) {
            tasks[t].signature = unit_signature(tasks[t].groups, mode);
            auto it = cache->entries.find(tasks[t].signature);
            if (it == cache->entries.end()) continue;
            outcomes[t] = it->second;
            tasks[t].cached = true;
        }
    }

    // Independent subproblems: a data-parallel map. jobs <= 1 runs the
    // serial reference path that tests compare the parallel path against.
    if (jobs > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
        for (long long t = 0; t < static_cast<long long>(tasks.size()); ++t) {
            if (tasks[t].cached) continue;
            try {
                outcomes[t] =
                    solve_transition(tasks[t].groups, config, delta, mode);
            } catch (const std::exception& e) {
                outcomes[t].evaluated = true;
                outcomes[t].error = e.what();
            }
        }
        for (const TransitionOutcome& o : outcomes)
            if (!o.error.empty()) throw Error(o.error);
    } else {
        for (size_t t = 0; t < tasks.size(); ++t)
            if (!tasks[t].cached)
                outcomes[t] =
                    solve_transition(tasks[t].groups, config, delta, mode);
    }

    if (cache)
        for (size_t t = 0; t < tasks.size(); ++t)
            if (!tasks[t].cached) cache->entries[tasks[t].signature] = outcomes[t];

    // Cached outcomes may carry a stale delta; reprice.
    for (TransitionOutcome& o : outcomes) {
        if (!o.feasible || o.empty_range) continue;
        o.unit.transition_cost = delta + o.unit.recompute_seconds;
        o.cost = o.unit.transition_cost;
    }

    std::map<std::pair<int, int>, const TransitionOutcome*> by_range;
    for (size_t t = 0; t < tasks.size(); ++t)
        by_range[{tasks[t].a, tasks[t].b}] = &outcomes[t];

    if (min_deficit_bytes) {
        *min_deficit_bytes = kInf;
        for (const TransitionOutcome& o : outcomes)
            if (o.evaluated && !o.feasible)
                *min_deficit_bytes = std::min(*min_deficit_bytes, o.deficit);
    }

    auto cost = [&](int a, int b) -> std::optional<double> {
        const TransitionOutcome* o = by_range.at({a, b});
        if (!o->feasible) return std::nullopt;
        return o->cost;
    };
    const auto choice = optimal_grouping(num_classes, cost);
    if (!choice.has_value()) return std::nullopt;

    GroupSequencesResult out;
    out.cost = choice->total;
    for (const auto& [a, b] : choice->ranges) {
        const TransitionOutcome* o = by_range.at({a, b});
        if (o->empty_range) continue;
        out.units.push_back(o->unit);
    }
    return out;
}

namespace {

// Auto slice-count floor: the smallest N whose split of the longest
// sequence fits on a stage at full checkpointing (all slices co-resident).
std::optional<int> first_fitting_slice_count(long long max_len,
                                             const SystemConfig& config) {
    const int cap = static_cast<int>(std::min<long long>(16, max_len));
    double max_state = 0;
    for (double b : config.model.stage_state_bytes)
        max_state = std::max(max_state, b);
    const double budget = config.cluster.mem_capacity - max_state;
    const int full = config.model.layers_per_stage(config.cluster);

    for (int n = 1; n <= cap; ++n) {
        const Mesh mesh = split_longest(max_len, n, config.cost, config.cluster,
                                        config.model);
        const SplitResult split = split_sequences({max_len}, mesh);
        double bytes = 0;
        for (const Chunk& c : split.split_chunks)
            bytes += activation_bytes(c, full, config.cluster, config.model);
        for (const TailSlice& t : split.tails) {
            Chunk tail;
            tail.kind = ChunkKind::Split;
            tail.context = t.context;
            tail.slices = {t.tokens};
            tail.tail = true;
            bytes += activation_bytes(tail, full, config.cluster, config.model);
        }
        if (split.split_chunks.empty() && split.tails.empty()) {
            Chunk whole;
            whole.kind = ChunkKind::Batched;
            whole.slices = {max_len};
            bytes = activation_bytes(whole, full, config.cluster, config.model);
        }
        if (bytes <= budget) return n;
    }
    return std::nullopt;
}

}  // namespace

SchedulePlan make_plan(const std::vector<long long>& lengths,
                       std::optional<int> slices, const SystemConfig& config,
                       PlanMode mode, int jobs) {
    config.validate();
    if (lengths.empty()) throw ContractError("empty workload");

    const long long max_len = *std::max_element(lengths.begin(), lengths.end());
    const int slice_cap = static_cast<int>(std::min<long long>(16, max_len));
    std::vector<int> candidates;
    if (slices.has_value()) {
        candidates.push_back(*slices);
    } else {
        // Sweep upward from the first slice count that fits the longest
        // sequence; once a candidate yields a feasible plan, two finer
        // candidates are still examined and the cheapest plan wins.
        const auto first = first_fitting_slice_count(max_len, config);
        if (!first.has_value())
            throw InfeasibleError(
                "no slice count <= 16 fits the longest sequence on a stage "
                "even at full checkpointing");
        for (int n = *first; n <= slice_cap; ++n) candidates.push_back(n);
    }

    double max_state = 0;
    for (double b : config.model.stage_state_bytes)
        max_state = std::max(max_state, b);
    // Cluster token capacity: resident tokens cost at least the
    // full-checkpoint floor (inputs plus keys and values of a tail slice).
    const double per_token_floor =
        config.model.elem_bytes * config.model.hidden_dim *
        config.model.layers_per_stage(config.cluster) / config.cluster.sp_degree;
    const long long capacity_tokens = static_cast<long long>(
        config.cluster.num_gpus * (config.cluster.mem_capacity - max_state) /
        per_token_floor);

    std::optional<SchedulePlan> best;
    double min_deficit = kInf;
    std::string first_error;
    TransitionCache cache;
    int first_feasible = -1;
    int tried = 0;
    for (int n : candidates) {
        if (first_feasible >= 0 && n > first_feasible + 2) break;
        ++tried;
        ChunkingResult chunking;
        try {
            chunking = mode == PlanMode::NoWbc
                           ? process_batch_uniform(lengths, n, config.cost,
                                                   config.cluster, config.model)
                           : process_batch(lengths, n, config.cost,
                                           config.cluster, config.model,
                                           capacity_tokens);
        } catch (const InfeasibleError& e) {
            if (first_error.empty()) first_error = e.what();
            continue;
        }

        double work_seconds = 0;
        for (const Chunk& c : chunking.chunks)
            work_seconds +=
                total_time(c, Phase::Forward, config.cost, config.cluster,
                           config.model) +
                total_time(c, Phase::Backward, config.cost, config.cluster,
                           config.model);
        const double delta = (config.cluster.pp_degree - 1) *
                             (work_seconds / chunking.chunks.size());

        const ClassIndex index = build_class_index(chunking);
        double deficit = kInf;
        const auto grouped =
            group_sequences(index, config, delta, mode, jobs, &deficit, &cache);
        min_deficit = std::min(min_deficit, deficit);
        if (!grouped.has_value()) continue;
        if (first_feasible < 0) first_feasible = n;

        SchedulePlan plan;
        plan.mode = mode;
        plan.slices = n;
        plan.auto_slices = !slices.has_value();
        plan.chunking = std::move(chunking);
        plan.units = grouped->units;
        plan.delta = delta;
        plan.est_cost = grouped->cost;
        plan.work_seconds = work_seconds;
        // Candidate slice counts produce different chunk populations, so the
        // comparison must include the steady-phase work, not just bubbles
        // and recompute.
        if (!best.has_value() || plan.work_seconds + plan.est_cost <
                                     best->work_seconds + best->est_cost)
            best = std::move(plan);
    }

    if (!best.has_value()) {
        std::ostringstream msg;
        msg << "planning failed: every candidate grouping is infeasible";
        if (min_deficit < kInf)
            msg << " (minimum memory deficit " << min_deficit << " bytes)";
        if (!first_error.empty()) msg << "; " << first_error;
        throw InfeasibleError(msg.str());
    }
    best->candidates_tried = tried;
    return *best;
}

std::vector<SimTrace> simulate_plan(const SchedulePlan& plan,
                                    const SystemConfig& config) {
    std::vector<SimTrace> traces;
    traces.reserve(plan.units.size());
    for (const PlannedUnit& pu : plan.units) {
        const CkptMap map = ckpt_map_from_ladder(
            pu.ladder, pu.f2b, config.cluster.pp_degree, pu.unit.size());
        traces.push_back(simulate_unit(pu.unit, map, config.cost,
                                       config.cluster, config.model));
    }
    return traces;
}

double plan_simulated_seconds(const std::vector<SimTrace>& traces) {
    double total = 0;
    for (const SimTrace& t : traces) total += t.makespan;
    return total;
}

}  // namespace epp

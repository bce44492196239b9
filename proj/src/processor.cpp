// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/processor.hpp"

#include <algorithm>
#include <cmath>

namespace epp {

namespace {

double slice_backward_seconds(long long context, long long tokens, bool tail,
                              const CostParams& params,
                              const ClusterConfig& cluster,
                              const ModelConfig& model) {
    Chunk c;
    c.kind = context > 0 ? ChunkKind::Split : ChunkKind::Batched;
    c.context = context;
    c.slices = {tokens};
    c.tail = context > 0 ? tail : true;
    return total_time(c, Phase::Backward, params, cluster, model);
}

double chunk_backward_seconds(const Chunk& c, const CostParams& params,
                              const ClusterConfig& cluster,
                              const ModelConfig& model) {
    return total_time(c, Phase::Backward, params, cluster, model);
}

}  // namespace

double relative_std_dev(const std::vector<double>& values) {
    if (values.empty()) throw ContractError("rsd of empty list");
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (mean <= 0) throw ContractError("rsd requires positive mean");
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size())) / mean;
}

Mesh split_longest(long long max_len, int slice_count, const CostParams& params,
                   const ClusterConfig& cluster, const ModelConfig& model) {
    if (slice_count < 1) throw ContractError("slice_count must be >= 1");
    if (max_len < slice_count)
        throw InfeasibleError("cannot split " + std::to_string(max_len) +
                              " tokens into " + std::to_string(slice_count) +
                              " slices");

    auto slice_time = [&](long long context, long long tokens) {
        return slice_backward_seconds(context, tokens, false, params, cluster,
                                      model);
    };

    // Largest slice that fits the budget given its context.
    auto max_tokens_within = [&](long long context, long long limit,
                                 double budget) -> long long {
        if (slice_time(context, 1) > budget) return 0;
        long long lo = 1, hi = limit;
        while (lo < hi) {
            const long long mid = lo + (hi - lo + 1) / 2;
            if (slice_time(context, mid) <= budget)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    };

    auto covers = [&](double budget) {
        long long consumed = 0;
        for (int i = 0; i < slice_count; ++i) {
            const long long take =
                max_tokens_within(consumed, max_len - consumed, budget);
            if (take == 0) return false;
            consumed += take;
            if (consumed >= max_len) return true;
        }
        return consumed >= max_len;
    };

    double lo = 0, hi = slice_time(0, max_len);
    for (int iter = 0; iter < 100; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (covers(mid))
            hi = mid;
        else
            lo = mid;
    }
    const double budget = hi;

    // Assemble exact boundaries at the found budget, reserving one token for
    // every remaining slice so the split always has slice_count pieces.
    std::vector<long long> sizes;
    long long consumed = 0;
    for (int i = 0; i < slice_count - 1; ++i) {
        const long long reserve = slice_count - 1 - i;
        long long take = max_tokens_within(consumed, max_len - consumed - reserve,
                                           budget);
        take = std::max(take, 1LL);
        sizes.push_back(take);
        consumed += take;
    }
    sizes.push_back(max_len - consumed);

    Mesh mesh;
    mesh.slice_lengths.assign(sizes.begin(), sizes.end() - 1);
    long long max_tokens = 0;
    double max_seconds = 0;
    long long context = 0;
    for (size_t i = 0; i < sizes.size(); ++i) {
        max_tokens = std::max(max_tokens, sizes[i]);
        max_seconds = std::max(
            max_seconds, slice_time(context, sizes[i]));
        context += sizes[i];
    }
    mesh.token_threshold = max_tokens;
    mesh.time_threshold = max_seconds;
    return mesh;
}

SplitResult split_sequences(const std::vector<long long>& lengths,
                            const Mesh& mesh) {
    SplitResult out;
    int next_id = 0;
    for (size_t seq = 0; seq < lengths.size(); ++seq) {
        const long long len = lengths[seq];
        if (mesh.slice_lengths.empty() || len <= mesh.slice_lengths.front()) {
            out.shorts.push_back({static_cast<int>(seq), len});
            continue;
        }
        long long remaining = len;
        long long context = 0;
        for (long long cell : mesh.slice_lengths) {
            if (remaining <= cell) break;
            Chunk c;
            c.id = next_id++;
            c.seq = static_cast<int>(seq);
            c.kind = ChunkKind::Split;
            c.context = context;
            c.slices = {cell};
            c.tail = false;
            out.split_chunks.push_back(std::move(c));
            context += cell;
            remaining -= cell;
        }
        out.tails.push_back({static_cast<int>(seq), remaining, context});
    }
    return out;
}

PackResult pack_shorts(const std::vector<TailSlice>& tails,
                       const std::vector<ShortSeq>& shorts, const Mesh& mesh,
                       const CostParams& params, const ClusterConfig& cluster,
                       const ModelConfig& model, const PackOptions& options) {
    PackResult out;
    for (const TailSlice& t : tails) {
        Bucket b;
        b.members.push_back({t.seq, t.tokens,
                             slice_backward_seconds(t.context, t.tokens, true,
                                                    params, cluster, model),
                             true, t.context});
        b.seconds = b.members.back().seconds;
        b.tokens = t.tokens;
        b.has_tail = true;
        out.buckets.push_back(std::move(b));
    }

    std::vector<BucketItem> items;
    items.reserve(shorts.size());
    for (const ShortSeq& s : shorts) {
        items.push_back({s.seq, s.tokens,
                         slice_backward_seconds(0, s.tokens, true, params,
                                                cluster, model),
                         false, 0});
    }
    std::sort(items.begin(), items.end(), [](const BucketItem& a,
                                             const BucketItem& b) {
        if (a.seconds != b.seconds) return a.seconds > b.seconds;
        if (a.tokens != b.tokens) return a.tokens > b.tokens;
        return a.seq < b.seq;
    });

    double time_threshold = mesh.time_threshold;
    const double time_cap = mesh.time_threshold * (1.0 + options.time_growth_cap);
    const bool cap_tokens = options.mode == PackMode::Balanced;
    const long long token_threshold =
        cap_tokens ? mesh.token_threshold : std::numeric_limits<long long>::max();
    auto& buckets = out.buckets;

    auto place = [&](const BucketItem& item) -> bool {
        std::vector<size_t> order(buckets.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            double ka, kb;
            if (options.mode == PackMode::Balanced) {
                ka = buckets[a].seconds / static_cast<double>(buckets[a].tokens);
                kb = buckets[b].seconds / static_cast<double>(buckets[b].tokens);
            } else {
                ka = buckets[a].seconds;
                kb = buckets[b].seconds;
            }
            if (ka != kb) return ka < kb;
            return a < b;
        });
        for (size_t i : order) {
            Bucket& b = buckets[i];
            if (b.seconds + item.seconds <= time_threshold &&
                b.tokens + item.tokens <= token_threshold) {
                b.members.push_back(item);
                b.seconds += item.seconds;
                b.tokens += item.tokens;
                return true;
            }
        }
        return false;
    };

    for (const BucketItem& item : items) {
        if (cap_tokens && item.tokens > token_threshold)
            throw InfeasibleError("short sequence exceeds the token threshold");

        long long min_tokens = std::numeric_limits<long long>::max();
        for (const Bucket& b : buckets) min_tokens = std::min(min_tokens, b.tokens);
        if (buckets.empty() || min_tokens + item.tokens > token_threshold) {
            Bucket b;
            b.members.push_back(item);
            b.seconds = item.seconds;
            b.tokens = item.tokens;
            out.buckets.push_back(std::move(b));
            continue;
        }

        if (place(item)) continue;

        if (options.mode == PackMode::Balanced) {
            // Raise the time threshold to admit the item into the least
            // loaded token-feasible bucket, up to the configured cap.
            double raised = std::numeric_limits<double>::infinity();
            for (const Bucket& b : buckets)
                if (b.tokens + item.tokens <= token_threshold)
                    raised = std::min(raised, b.seconds + item.seconds);
            if (raised <= time_cap) {
                time_threshold = raised;
                const bool ok = place(item);
                if (!ok) throw Error("packing retry failed after perturbation");
                continue;
            }
        }
        Bucket b;
        b.members.push_back(item);
        b.seconds = item.seconds;
        b.tokens = item.tokens;
        out.buckets.push_back(std::move(b));
    }

    out.final_time_threshold = time_threshold;
    return out;
}

namespace {

ChunkingResult assemble(std::vector<Chunk> split_chunks,
                        const std::vector<Bucket>& buckets, size_t num_seqs,
                        const Mesh& mesh, double final_time_threshold,
                        const CostParams& params, const ClusterConfig& cluster,
                        const ModelConfig& model) {
    ChunkingResult out;
    out.mesh = mesh;
    out.final_time_threshold = final_time_threshold;
    out.per_sequence.assign(num_seqs, {});
    out.chunks = std::move(split_chunks);

    int next_id = static_cast<int>(out.chunks.size());
    for (const Chunk& c : out.chunks)
        out.per_sequence[static_cast<size_t>(*c.seq)].push_back(c.id);

    for (const Bucket& b : buckets) {
        Chunk c;
        c.id = next_id++;
        if (b.has_tail) {
            const BucketItem& tail = b.members.front();
            c.seq = tail.seq;
            c.context = tail.context;
            c.tail = true;
            c.kind = b.members.size() == 1 ? ChunkKind::Split : ChunkKind::Hybrid;
        } else {
            c.kind = ChunkKind::Batched;
            c.context = 0;
            c.tail = true;
        }
        for (const BucketItem& m : b.members) c.slices.push_back(m.tokens);
        c.validate();
        for (const BucketItem& m : b.members)
            out.per_sequence[static_cast<size_t>(m.seq)].push_back(c.id);
        out.chunks.push_back(std::move(c));
    }

    std::vector<double> seconds, tokens;
    seconds.reserve(out.chunks.size());
    tokens.reserve(out.chunks.size());
    for (const Chunk& c : out.chunks) {
        seconds.push_back(chunk_backward_seconds(c, params, cluster, model));
        tokens.push_back(static_cast<double>(c.tokens()));
    }
    out.time_rsd = relative_std_dev(seconds);
    out.length_rsd = relative_std_dev(tokens);
    return out;
}

}  // namespace

ChunkingResult process_batch(const std::vector<long long>& lengths,
                             int slice_count, const CostParams& params,
                             const ClusterConfig& cluster,
                             const ModelConfig& model,
                             long long capacity_tokens,
                             const PackOptions& options) {
    if (lengths.empty()) throw ContractError("empty workload");
    for (long long l : lengths)
        if (l < 1) throw ContractError("sequence lengths must be >= 1");

    const long long max_len = *std::max_element(lengths.begin(), lengths.end());
    const Mesh mesh = split_longest(max_len, slice_count, params, cluster, model);
    if (mesh.token_threshold > capacity_tokens)
        throw InfeasibleError(
            "token threshold " + std::to_string(mesh.token_threshold) +
            " exceeds cluster token capacity " + std::to_string(capacity_tokens));

    SplitResult split = split_sequences(lengths, mesh);
    PackResult packed = pack_shorts(split.tails, split.shorts, mesh, params,
                                    cluster, model, options);
    return assemble(std::move(split.split_chunks), packed.buckets,
                    lengths.size(), mesh, packed.final_time_threshold, params,
                    cluster, model);
}

ChunkingResult process_batch_uniform(const std::vector<long long>& lengths,
                                     int slice_count, const CostParams& params,
                                     const ClusterConfig& cluster,
                                     const ModelConfig& model) {
    if (lengths.empty()) throw ContractError("empty workload");
    const long long max_len = *std::max_element(lengths.begin(), lengths.end());
    const Mesh balanced =
        split_longest(max_len, slice_count, params, cluster, model);
    const long long size = balanced.token_threshold;

    std::vector<Chunk> split_chunks;
    std::vector<Bucket> buckets;
    int next_id = 0;
    for (size_t seq = 0; seq < lengths.size(); ++seq) {
        const long long len = lengths[seq];
        if (len <= size) continue;
        const long long parts = (len + size - 1) / size;
        long long context = 0;
        for (long long i = 0; i < parts; ++i) {
            const long long tokens = len / parts + (i < len % parts ? 1 : 0);
            const bool is_tail = i + 1 == parts;
            if (is_tail) {
                Bucket b;
                b.members.push_back(
                    {static_cast<int>(seq), tokens,
                     slice_backward_seconds(context, tokens, true, params,
                                            cluster, model),
                     true, context});
                b.seconds = b.members.back().seconds;
                b.tokens = tokens;
                b.has_tail = true;
                buckets.push_back(std::move(b));
            } else {
                Chunk c;
                c.id = next_id++;
                c.seq = static_cast<int>(seq);
                c.kind = ChunkKind::Split;
                c.context = context;
                c.slices = {tokens};
                c.tail = false;
                split_chunks.push_back(std::move(c));
            }
            context += tokens;
        }
    }
    // Shorts packed first-fit in arrival order into fixed-size buckets.
    Bucket open;
    bool open_used = false;
    for (size_t seq = 0; seq < lengths.size(); ++seq) {
        const long long len = lengths[seq];
        if (len > size) continue;
        if (open_used && open.tokens + len > size) {
            buckets.push_back(open);
            open = Bucket{};
            open_used = false;
        }
        open.members.push_back(
            {static_cast<int>(seq), len,
             slice_backward_seconds(0, len, true, params, cluster, model), false,
             0});
        open.seconds += open.members.back().seconds;
        open.tokens += len;
        open_used = true;
    }
    if (open_used) buckets.push_back(open);

    Mesh mesh;
    mesh.slice_lengths = balanced.slice_lengths;
    mesh.token_threshold = size;
    mesh.time_threshold = balanced.time_threshold;
    return assemble(std::move(split_chunks), buckets, lengths.size(), mesh,
                    balanced.time_threshold, params, cluster, model);
}

}  // namespace epp

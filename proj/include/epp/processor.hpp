// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <vector>

#include "epp/chunk.hpp"
#include "epp/config.hpp"
#include "epp/cost_model.hpp"

namespace epp {

/// Slice template derived from splitting the longest sequence. Sequences are
/// cut greedily against slice_lengths; whatever remains becomes a tail slice.
struct Mesh {
    std::vector<long long> slice_lengths;  // non-increasing, one per non-tail cut
    double time_threshold = 0;             // max backward seconds per slice
    long long token_threshold = 0;         // max tokens per slice
};

struct TailSlice {
    int seq = -1;
    long long tokens = 0;
    long long context = 0;
};

struct ShortSeq {
    int seq = -1;
    long long tokens = 0;
};

struct SplitResult {
    std::vector<Chunk> split_chunks;  // ids assigned in (sequence, slice) order
    std::vector<TailSlice> tails;
    std::vector<ShortSeq> shorts;
};

struct BucketItem {
    int seq = -1;
    long long tokens = 0;
    double seconds = 0;  // backward-pass estimate
    bool is_tail = false;
    long long context = 0;
};

struct Bucket {
    std::vector<BucketItem> members;
    double seconds = 0;
    long long tokens = 0;
    bool has_tail = false;
};

enum class PackMode {
    // Best bucket by time/tokens ratio under both thresholds, with the
    // time-threshold perturbation: balances time and length together.
    Balanced,
    // Pure time balancing: best bucket by accumulated time, no token
    // threshold, no perturbation. Mirrors packers that ignore chunk length.
    TimeOnly,
};

struct PackOptions {
    PackMode mode = PackMode::Balanced;
    double time_growth_cap = 0.5;  // max relative growth of the time threshold
};

struct PackResult {
    std::vector<Bucket> buckets;
    double final_time_threshold = 0;
};

struct ChunkingResult {
    std::vector<Chunk> chunks;
    std::vector<std::vector<int>> per_sequence;  // seq id -> chunk ids, slice order
    double time_rsd = 0;    // over per-chunk backward seconds
    double length_rsd = 0;  // over per-chunk token counts
    Mesh mesh;
    double final_time_threshold = 0;
};

/// Splits max_len into slice_count contiguous slices minimizing the largest
/// per-slice backward time; yields the mesh plus both packing thresholds.
Mesh split_longest(long long max_len, int slice_count, const CostParams& params,
                   const ClusterConfig& cluster, const ModelConfig& model);

/// Cuts each sequence against the mesh. Sequences that cannot absorb the
/// first mesh slice are emitted unsplit as shorts.
SplitResult split_sequences(const std::vector<long long>& lengths,
                            const Mesh& mesh);

/// Best-fit-decreasing packing of shorts into tail-seeded buckets under the
/// mesh thresholds. At most one tail slice per bucket.
PackResult pack_shorts(const std::vector<TailSlice>& tails,
                       const std::vector<ShortSeq>& shorts, const Mesh& mesh,
                       const CostParams& params, const ClusterConfig& cluster,
                       const ModelConfig& model, const PackOptions& options = {});

/// Full pipeline: split the longest sequence, cut everything, pack shorts,
/// emit chunks with balance metrics.
ChunkingResult process_batch(
    const std::vector<long long>& lengths, int slice_count,
    const CostParams& params, const ClusterConfig& cluster,
    const ModelConfig& model,
    long long capacity_tokens = std::numeric_limits<long long>::max(),
    const PackOptions& options = {});

/// Fixed-size chunking baseline: long sequences split evenly, shorts packed
/// first-fit in arrival order, tails left unpacked.
ChunkingResult process_batch_uniform(const std::vector<long long>& lengths,
                                     int slice_count, const CostParams& params,
                                     const ClusterConfig& cluster,
                                     const ModelConfig& model);

/// Population standard deviation over mean.
double relative_std_dev(const std::vector<double>& values);

}  // namespace epp

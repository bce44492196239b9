// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "epp/errors.hpp"

namespace epp {

enum class Phase { Forward, Backward };

enum class ChunkKind { Batched, Split, Hybrid };

std::string to_string(ChunkKind kind);
ChunkKind chunk_kind_from_string(const std::string& s);

/// The heterogeneous micro-batch unit.
///
/// A chunk is either a pack of whole short sequences (Batched), one slice of
/// a split long sequence with its causal context (Split), or a tail slice
/// packed together with short sequences (Hybrid).
///
/// Convention: slices[0] is the primary slice, i.e. the one the context
/// belongs to when context > 0. For Batched chunks (context == 0) the choice
/// is immaterial and slices[0] is used as the designated first slice.
struct Chunk {
    int id = -1;
    std::optional<int> seq;      // originating sequence, absent for pure packs
    ChunkKind kind = ChunkKind::Batched;
    long long context = 0;       // tokens preceding slices[0] in its sequence
    std::vector<long long> slices;
    bool tail = true;            // true when no later slice of the same
                                 // sequence exists (KV grads don't linger)

    long long tokens() const {
        return std::accumulate(slices.begin(), slices.end(), 0LL);
    }

    void validate() const;
};

inline void Chunk::validate() const {
    if (slices.empty()) throw ContractError("chunk has no slices");
    for (long long s : slices)
        if (s <= 0) throw ContractError("chunk slice length must be positive");
    if (context < 0) throw ContractError("chunk context must be non-negative");
    switch (kind) {
        case ChunkKind::Batched:
            if (context != 0 || !tail)
                throw ContractError("batched chunk requires context=0 and tail");
            break;
        case ChunkKind::Split:
            if (slices.size() != 1)
                throw ContractError("split chunk carries exactly one slice");
            if (context == 0 && tail)
                throw ContractError("context-free split chunk cannot be a tail");
            break;
        case ChunkKind::Hybrid:
            if (context <= 0 || !tail)
                throw ContractError("hybrid chunk requires context>0 and tail");
            break;
    }
}

}  // namespace epp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epp/errors.hpp"

namespace epp {

struct Workload {
    std::vector<long long> lengths;
    std::string source;
    long long context_cap = 0;
};

/// Line-delimited integer lengths, or a JSON histogram document
/// ({"count": N, "seed": s, "intervals": [{"max_len": ..., "prob": ...}]})
/// expanded by largest-remainder apportionment.
Workload load_workload(const std::string& path, long long context_cap);

struct GeneratorOptions {
    long long uniform_min = 1;  // uniform preset only
    long long uniform_max = 0;  // 0 means context_cap
};

/// Deterministic synthetic length distributions. Presets draw from bucketed
/// interval tables (log-uniform inside each interval); github_like and
/// commoncrawl_like follow heavily skewed corpus shapes where most samples
/// are short and a sub-percent share of very long sequences carries a large
/// token fraction.
Workload generate_workload(const std::string& preset, int count,
                           std::uint64_t seed, long long context_cap,
                           const GeneratorOptions& options = {});

struct IntervalStat {
    long long lo = 0;  // inclusive
    long long hi = 0;  // inclusive
    long long samples = 0;
    double sample_frac = 0;
    double token_frac = 0;
    double flop_frac = 0;  // sum of squared lengths, the quadratic-work proxy
};

std::vector<IntervalStat> workload_stats(const Workload& workload);

std::string format_stats(const std::vector<IntervalStat>& stats);

}  // namespace epp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace epp {

namespace {

// splitmix64: tiny, portable, reproducible across platforms.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
};

struct Interval {
    long long lo;  // inclusive
    long long hi;  // inclusive
    double prob;
};

long long sample_log_uniform(Rng& rng, long long lo, long long hi) {
    if (lo >= hi) return lo;
    const double u = rng.uniform();
    const double v = std::exp(std::log(static_cast<double>(lo)) +
                              u * (std::log(static_cast<double>(hi + 1)) -
                                   std::log(static_cast<double>(lo))));
    const long long len = static_cast<long long>(v);
    return std::clamp(len, lo, hi);
}

// Bucket boundaries follow powers of two from 1K to 192K. Probabilities are
// calibrated against the corpus summary shares (tests pin the resulting
// sample and token fractions).
const std::vector<Interval> kGithubLike = {
    {1, 1023, 0.620},       {1024, 2047, 0.150},    {2048, 4095, 0.090},
    {4096, 8191, 0.055},    {8192, 16383, 0.064},   {16384, 32767, 0.010},
    {32768, 65535, 0.005},  {65536, 131071, 0.005}, {131072, 196608, 0.001},
};

const std::vector<Interval> kCommonCrawlLike = {
    {1, 1023, 0.480},        {1024, 2047, 0.270},     {2048, 4095, 0.140},
    {4096, 8191, 0.062},     {8192, 16383, 0.030},    {16384, 32767, 0.012},
    {32768, 65535, 0.0045},  {65536, 131071, 0.0012}, {131072, 196608, 0.0003},
};

std::vector<long long> expand_counts(const std::vector<Interval>& intervals,
                                     int count) {
    // Largest-remainder apportionment so shares hit the targets exactly.
    std::vector<long long> out(intervals.size(), 0);
    std::vector<std::pair<double, size_t>> remainders;
    long long assigned = 0;
    for (size_t i = 0; i < intervals.size(); ++i) {
        const double exact = intervals[i].prob * count;
        out[i] = static_cast<long long>(std::floor(exact));
        assigned += out[i];
        remainders.push_back({exact - std::floor(exact), i});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a,
                                                       const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (long long i = 0; i < count - assigned; ++i)
        ++out[remainders[static_cast<size_t>(i) % remainders.size()].second];
    return out;
}

Workload from_intervals(const std::vector<Interval>& intervals, int count,
                        std::uint64_t seed, long long context_cap,
                        const std::string& source) {
    double total = 0;
    for (const Interval& iv : intervals) total += iv.prob;
    if (std::fabs(total - 1.0) > 1e-6)
        throw ConfigError("interval probabilities must sum to 1");

    const std::vector<long long> counts = expand_counts(intervals, count);
    Rng rng(seed);
    Workload w;
    w.source = source;
    w.context_cap = context_cap;
    for (size_t i = 0; i < intervals.size(); ++i)
        for (long long j = 0; j < counts[i]; ++j)
            w.lengths.push_back(
                sample_log_uniform(rng, intervals[i].lo, intervals[i].hi));
    for (long long& len : w.lengths) len = std::min(len, context_cap);
    return w;
}

}  // namespace

Workload load_workload(const std::string& path, long long context_cap) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open workload file: " + path);

    // Histogram documents start with '{'; everything else is one length per
    // line.
    char first = 0;
    in >> std::ws;
    first = static_cast<char>(in.peek());
    if (first == '{') {
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("workload " + path + ": " + e.what());
        }
        std::vector<Interval> intervals;
        long long lo = 1;
        try {
            for (const auto& entry : doc.at("intervals")) {
                const long long hi = entry.at("max_len").get<long long>();
                intervals.push_back({lo, hi, entry.at("prob").get<double>()});
                lo = hi + 1;
            }
            const int count = doc.at("count").get<int>();
            const std::uint64_t seed =
                doc.contains("seed") ? doc.at("seed").get<std::uint64_t>() : 0;
            Workload w = from_intervals(intervals, count, seed, context_cap,
                                        path);
            if (w.lengths.empty()) throw ParseError("empty workload: " + path);
            return w;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("workload " + path + ": " + e.what());
        }
    }

    Workload w;
    w.source = path;
    w.context_cap = context_cap;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            size_t pos = 0;
            const long long len = std::stoll(line, &pos);
            if (pos != line.size() || len < 1) throw std::invalid_argument("");
            w.lengths.push_back(std::min(len, context_cap));
        } catch (const std::exception&) {
            throw ParseError("workload " + path + " line " +
                             std::to_string(line_no) + ": bad length '" + line +
                             "'");
        }
    }
    if (w.lengths.empty()) throw ParseError("empty workload: " + path);
    return w;
}

Workload generate_workload(const std::string& preset, int count,
                           std::uint64_t seed, long long context_cap,
                           const GeneratorOptions& options) {
    if (count < 1) throw ContractError("count must be >= 1");
    if (context_cap < 1) throw ContractError("context_cap must be >= 1");
    const std::string source = preset + ":" + std::to_string(seed);

    if (preset == "github_like")
        return from_intervals(kGithubLike, count, seed, context_cap, source);
    if (preset == "commoncrawl_like")
        return from_intervals(kCommonCrawlLike, count, seed, context_cap,
                              source);
    if (preset == "uniform") {
        const long long lo = options.uniform_min;
        const long long hi =
            options.uniform_max > 0 ? options.uniform_max : context_cap;
        if (lo < 1 || hi < lo) throw ConfigError("bad uniform range");
        Rng rng(seed);
        Workload w;
        w.source = source;
        w.context_cap = context_cap;
        for (int i = 0; i < count; ++i) {
            const long long len =
                lo + static_cast<long long>(rng.uniform() *
                                            static_cast<double>(hi - lo + 1));
            w.lengths.push_back(std::min(std::clamp(len, lo, hi), context_cap));
        }
        return w;
    }
    throw ConfigError("unknown preset: " + preset);
}

std::vector<IntervalStat> workload_stats(const Workload& workload) {
    if (workload.lengths.empty()) throw ContractError("empty workload");
    std::vector<std::pair<long long, long long>> bounds;
    bounds.push_back({1, 1023});
    for (long long lo = 1024; lo < 196609; lo *= 2)
        bounds.push_back({lo, std::min(2 * lo - 1, 196608LL)});
    if (bounds.back().second < workload.context_cap)
        bounds.back().second = std::numeric_limits<long long>::max();

    std::vector<IntervalStat> stats;
    for (const auto& [lo, hi] : bounds) stats.push_back({lo, hi, 0, 0, 0, 0});

    double total_tokens = 0, total_flops = 0;
    for (long long len : workload.lengths) {
        total_tokens += static_cast<double>(len);
        total_flops += static_cast<double>(len) * static_cast<double>(len);
        for (IntervalStat& s : stats) {
            if (len >= s.lo && len <= s.hi) {
                ++s.samples;
                s.token_frac += static_cast<double>(len);
                s.flop_frac += static_cast<double>(len) * static_cast<double>(len);
                break;
            }
        }
    }
    for (IntervalStat& s : stats) {
        s.sample_frac = static_cast<double>(s.samples) /
                        static_cast<double>(workload.lengths.size());
        s.token_frac /= total_tokens;
        s.flop_frac /= total_flops;
    }
    return stats;
}

std::string format_stats(const std::vector<IntervalStat>& stats) {
    std::ostringstream out;
    out << "  interval            samples   sample%   token%    flop%\n";
    for (const IntervalStat& s : stats) {
        if (s.samples == 0) continue;
        std::ostringstream iv;
        iv << "[" << s.lo << ", " << (s.hi == std::numeric_limits<long long>::max()
                                          ? std::string("inf")
                                          : std::to_string(s.hi))
           << "]";
        out << "  " << std::left << std::setw(20) << iv.str() << std::right
            << std::setw(7) << s.samples << std::fixed << std::setprecision(2)
            << std::setw(10) << 100 * s.sample_frac << std::setw(9)
            << 100 * s.token_frac << std::setw(9) << 100 * s.flop_frac << "\n";
    }
    return out.str();
}

}  // namespace epp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include <numeric>

#include <doctest.h>

#include "epp/processor.hpp"
#include "support.hpp"

using namespace epp;

namespace {

// Pure-quadratic toy model: slice time is just token arithmetic.
struct Toy {
    ClusterConfig cluster = test::make_cluster(1, 1);
    ModelConfig model = test::make_model(4, 8, 1e3, 1);
    CostParams params = test::make_params(1.0, 0.0, 0.0, 1.0);
};

long long brute_best_first_slice(long long total) {
    // Oracle: integer boundary minimizing the larger of the two slice times.
    long long best_a = 1;
    double best = 1e300;
    for (long long a = 1; a < total; ++a) {
        const double t1 = static_cast<double>(a) * a;
        const double t2 = static_cast<double>(total) * total -
                          static_cast<double>(a) * a;
        const double m = std::max(t1, t2);
        if (m < best) {
            best = m;
            best_a = a;
        }
    }
    return best_a;
}

}  // namespace

TEST_CASE("relative_std_dev") {
    CHECK(relative_std_dev({5, 5, 5}) == 0.0);
    CHECK(relative_std_dev({1, 3}) == doctest::Approx(0.5));
    CHECK(relative_std_dev({2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(0.4));
    CHECK_THROWS_AS(relative_std_dev({}), ContractError);
    CHECK_THROWS_AS(relative_std_dev({0, 0}), ContractError);
}

TEST_CASE("split_longest with one slice keeps the sequence whole") {
    Toy toy;
    const Mesh mesh = split_longest(5000, 1, toy.params, toy.cluster, toy.model);
    CHECK(mesh.slice_lengths.empty());
    CHECK(mesh.token_threshold == 5000);
    CHECK(mesh.time_threshold == doctest::Approx(5000.0 * 5000.0));
}

TEST_CASE("split_longest balances quadratic work") {
    Toy toy;
    const Mesh mesh =
        split_longest(16384, 2, toy.params, toy.cluster, toy.model);
    REQUIRE(mesh.slice_lengths.size() == 1);
    CHECK(mesh.slice_lengths[0] == brute_best_first_slice(16384));
    CHECK(mesh.slice_lengths[0] == 11585);
    CHECK(mesh.token_threshold == 11585);
}

TEST_CASE("split_longest rejects more slices than tokens") {
    Toy toy;
    CHECK_THROWS_AS(split_longest(3, 4, toy.params, toy.cluster, toy.model),
                    InfeasibleError);
}

TEST_CASE("split_sequences cuts against the mesh greedily") {
    Mesh mesh;
    mesh.slice_lengths = {8192, 4096, 2048};
    mesh.time_threshold = 1e12;
    mesh.token_threshold = 8192;

    SUBCASE("long sequence gets two cuts and a tail") {
        const SplitResult r = split_sequences({13312}, mesh);
        REQUIRE(r.split_chunks.size() == 2);
        CHECK(r.split_chunks[0].context == 0);
        CHECK(r.split_chunks[0].slices == std::vector<long long>{8192});
        CHECK_FALSE(r.split_chunks[0].tail);
        CHECK(r.split_chunks[1].context == 8192);
        CHECK(r.split_chunks[1].slices == std::vector<long long>{4096});
        CHECK_FALSE(r.split_chunks[1].tail);
        REQUIRE(r.tails.size() == 1);
        CHECK(r.tails[0].tokens == 1024);
        CHECK(r.tails[0].context == 12288);
        CHECK(r.shorts.empty());
    }
    SUBCASE("short sequence is not split") {
        const SplitResult r = split_sequences({3000}, mesh);
        CHECK(r.split_chunks.empty());
        CHECK(r.tails.empty());
        REQUIRE(r.shorts.size() == 1);
        CHECK(r.shorts[0].tokens == 3000);
    }
    SUBCASE("boundary length leaves the last cell as the tail") {
        const SplitResult r = split_sequences({12288}, mesh);
        REQUIRE(r.split_chunks.size() == 1);
        CHECK(r.split_chunks[0].slices == std::vector<long long>{8192});
        REQUIRE(r.tails.size() == 1);
        CHECK(r.tails[0].tokens == 4096);
        CHECK(r.tails[0].context == 8192);
    }
}

TEST_CASE("pack_shorts traces best-fit-decreasing by hand") {
    Toy toy;
    // Linear-time model so items of 4 tokens cost 4 each.
    toy.params = test::make_params(0.0, 1.0, 0.0, 1.0);
    Mesh mesh;
    mesh.slice_lengths = {100};
    mesh.token_threshold = 8;
    mesh.time_threshold = 1e9;

    const std::vector<ShortSeq> shorts = {{0, 4}, {1, 4}, {2, 4}, {3, 4}};
    const PackResult r = pack_shorts({}, shorts, mesh, toy.params, toy.cluster,
                                     toy.model);
    REQUIRE(r.buckets.size() == 2);
    CHECK(r.buckets[0].tokens == 8);
    CHECK(r.buckets[1].tokens == 8);
    CHECK(r.buckets[0].members.size() == 2);
}

TEST_CASE("a tail bucket absorbs a fitting short") {
    Toy toy;
    toy.params = test::make_params(0.0, 1.0, 0.0, 1.0);
    Mesh mesh;
    mesh.slice_lengths = {100};
    mesh.token_threshold = 50;
    mesh.time_threshold = 1e9;

    const std::vector<TailSlice> tails = {{0, 10, 100}};
    const std::vector<ShortSeq> shorts = {{1, 20}};
    const PackResult r =
        pack_shorts(tails, shorts, mesh, toy.params, toy.cluster, toy.model);
    REQUIRE(r.buckets.size() == 1);
    CHECK(r.buckets[0].has_tail);
    CHECK(r.buckets[0].tokens == 30);
    CHECK(r.buckets[0].members.size() == 2);
}

TEST_CASE("tail slices never share a bucket") {
    Toy toy;
    Mesh mesh;
    mesh.slice_lengths = {100};
    mesh.token_threshold = 1000;
    mesh.time_threshold = 1e18;

    const std::vector<TailSlice> tails = {{0, 10, 100}, {1, 10, 100},
                                          {2, 10, 100}};
    const PackResult r =
        pack_shorts(tails, {}, mesh, toy.params, toy.cluster, toy.model);
    CHECK(r.buckets.size() == 3);
    for (const Bucket& b : r.buckets) {
        int tail_count = 0;
        for (const BucketItem& m : b.members) tail_count += m.is_tail ? 1 : 0;
        CHECK(tail_count == 1);
    }
}

TEST_CASE("process_batch emits a single batched chunk for a lone short") {
    Toy toy;
    const ChunkingResult r =
        process_batch({4096}, 1, toy.params, toy.cluster, toy.model);
    REQUIRE(r.chunks.size() == 1);
    CHECK(r.chunks[0].kind == ChunkKind::Batched);
    CHECK(r.chunks[0].tokens() == 4096);
    CHECK(r.per_sequence == std::vector<std::vector<int>>{{0}});
}

TEST_CASE("process_batch conserves tokens and respects thresholds") {
    test::Rng rng(31);
    const ClusterConfig cluster = test::make_cluster(2, 2);
    const ModelConfig model = test::make_model(8, 256, 1e5, 2);
    const CostParams params = test::make_params(1e-9, 1e-6, 1e-4);

    for (int trial = 0; trial < 20; ++trial) {
        std::vector<long long> lengths;
        const int n = static_cast<int>(rng.range(1, 60));
        for (int i = 0; i < n; ++i)
            lengths.push_back(rng.range(1, rng.range(0, 1) ? 3000 : 60000));
        const int slices = static_cast<int>(rng.range(1, 6));
        if (*std::max_element(lengths.begin(), lengths.end()) < slices) continue;

        const ChunkingResult r =
            process_batch(lengths, slices, params, cluster, model);

        long long in = std::accumulate(lengths.begin(), lengths.end(), 0LL);
        long long out = 0;
        for (const Chunk& c : r.chunks) out += c.tokens();
        CHECK(in == out);

        for (const Chunk& c : r.chunks) {
            if (c.kind != ChunkKind::Split)
                CHECK(c.tokens() <= r.mesh.token_threshold);
            CHECK(total_time(c, Phase::Backward, params, cluster, model) <=
                  r.final_time_threshold * (1 + 1e-9));
        }

        // Order preservation: contexts are the running sums of slice lengths.
        for (size_t seq = 0; seq < r.per_sequence.size(); ++seq) {
            long long run = 0;
            for (size_t j = 0; j < r.per_sequence[seq].size(); ++j) {
                const Chunk& c = r.chunks[static_cast<size_t>(
                    r.per_sequence[seq][j])];
                if (r.per_sequence[seq].size() > 1) {
                    CHECK(c.context == run);
                    run += c.slices[0];
                }
            }
        }

        // Tail exclusivity: a chunk hosts at most one split sequence's tail.
        for (const Chunk& c : r.chunks) {
            int multis = 0;
            for (size_t seq = 0; seq < r.per_sequence.size(); ++seq) {
                if (r.per_sequence[seq].size() <= 1) continue;
                for (int cid : r.per_sequence[seq])
                    if (cid == c.id) ++multis;
            }
            CHECK(multis <= 1);
        }
    }
}

TEST_CASE("process_batch is deterministic") {
    const ClusterConfig cluster = test::make_cluster(2, 2);
    const ModelConfig model = test::make_model(8, 256, 1e5, 2);
    const CostParams params = test::make_params(1e-9, 1e-6, 1e-4);
    std::vector<long long> lengths = {50000, 200, 3000, 888, 4096, 17, 29000,
                                      512, 640, 2048};
    const ChunkingResult a = process_batch(lengths, 3, params, cluster, model);
    const ChunkingResult b = process_batch(lengths, 3, params, cluster, model);
    REQUIRE(a.chunks.size() == b.chunks.size());
    for (size_t i = 0; i < a.chunks.size(); ++i) {
        CHECK(a.chunks[i].slices == b.chunks[i].slices);
        CHECK(a.chunks[i].context == b.chunks[i].context);
    }
    CHECK(a.time_rsd == b.time_rsd);
    CHECK(a.length_rsd == b.length_rsd);
}

TEST_CASE("balanced packing beats time-only packing on length balance") {
    const ClusterConfig cluster = test::make_cluster(4, 2);
    const ModelConfig model = test::make_model(16, 1024, 1e6, 4);
    const CostParams params = test::make_params(2e-9, 2e-5, 2e-3);

    test::Rng rng(11);
    std::vector<long long> lengths;
    for (int i = 0; i < 150; ++i) lengths.push_back(rng.range(100, 4000));
    for (int i = 0; i < 6; ++i) lengths.push_back(rng.range(40000, 90000));

    PackOptions balanced;
    PackOptions time_only;
    time_only.mode = PackMode::TimeOnly;
    const ChunkingResult a = process_batch(
        lengths, 6, params, cluster, model,
        std::numeric_limits<long long>::max(), balanced);
    const ChunkingResult b = process_batch(
        lengths, 6, params, cluster, model,
        std::numeric_limits<long long>::max(), time_only);
    CHECK(a.length_rsd < b.length_rsd);
}

TEST_CASE("uniform chunking splits evenly and packs in arrival order") {
    Toy toy;
    toy.params = test::make_params(0.0, 1.0, 0.0, 1.0);
    const ChunkingResult r = process_batch_uniform({10000, 100, 200, 100}, 2,
                                                   toy.params, toy.cluster,
                                                   toy.model);
    long long out = 0;
    for (const Chunk& c : r.chunks) out += c.tokens();
    CHECK(out == 10400);
    bool saw_split = false, saw_batched = false;
    for (const Chunk& c : r.chunks) {
        if (c.kind == ChunkKind::Split) saw_split = true;
        if (c.kind == ChunkKind::Batched) {
            saw_batched = true;
            CHECK(c.tokens() == 400);  // the three shorts share one pack
        }
    }
    CHECK(saw_split);
    CHECK(saw_batched);
}

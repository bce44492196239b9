// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/plan_io.hpp"

#include <fstream>
#include <map>

namespace epp {

namespace {

nlohmann::json chunk_to_json(const Chunk& c) {
    nlohmann::json j;
    j["id"] = c.id;
    if (c.seq.has_value()) j["seq"] = *c.seq;
    j["kind"] = to_string(c.kind);
    j["context"] = c.context;
    j["slices"] = c.slices;
    j["tail"] = c.tail;
    return j;
}

Chunk chunk_from_json(const nlohmann::json& j) {
    Chunk c;
    c.id = j.at("id").get<int>();
    if (j.contains("seq")) c.seq = j.at("seq").get<int>();
    c.kind = chunk_kind_from_string(j.at("kind").get<std::string>());
    c.context = j.at("context").get<long long>();
    c.slices = j.at("slices").get<std::vector<long long>>();
    c.tail = j.at("tail").get<bool>();
    c.validate();
    return c;
}

}  // namespace

std::string to_string(ChunkKind kind) {
    switch (kind) {
        case ChunkKind::Batched: return "batched";
        case ChunkKind::Split: return "split";
        case ChunkKind::Hybrid: return "hybrid";
    }
    return "?";
}

ChunkKind chunk_kind_from_string(const std::string& s) {
    if (s == "batched") return ChunkKind::Batched;
    if (s == "split") return ChunkKind::Split;
    if (s == "hybrid") return ChunkKind::Hybrid;
    throw ParseError("unknown chunk kind: " + s);
}

nlohmann::json plan_to_json(const SchedulePlan& plan,
                            const SystemConfig& config) {
    nlohmann::json doc;
    doc["version"] = kPlanDocVersion;
    doc["kind"] = "plan";
    doc["mode"] = to_string(plan.mode);
    doc["slices"] = plan.slices;
    doc["auto_slices"] = plan.auto_slices;
    doc["candidates_tried"] = plan.candidates_tried;
    doc["config"] = config.to_json();
    doc["delta"] = plan.delta;
    doc["est_cost"] = plan.est_cost;
    doc["work_seconds"] = plan.work_seconds;
    doc["metrics"] = {{"time_rsd", plan.chunking.time_rsd},
                      {"length_rsd", plan.chunking.length_rsd}};
    doc["mesh"] = {{"slice_lengths", plan.chunking.mesh.slice_lengths},
                   {"time_threshold", plan.chunking.mesh.time_threshold},
                   {"token_threshold", plan.chunking.mesh.token_threshold},
                   {"final_time_threshold", plan.chunking.final_time_threshold}};

    nlohmann::json chunks = nlohmann::json::array();
    for (const Chunk& c : plan.chunking.chunks) chunks.push_back(chunk_to_json(c));
    doc["chunks"] = chunks;
    doc["per_sequence"] = plan.chunking.per_sequence;

    nlohmann::json units = nlohmann::json::array();
    for (const PlannedUnit& pu : plan.units) {
        nlohmann::json u;
        std::vector<int> ids;
        for (const Chunk& c : pu.unit.chunks) ids.push_back(c.id);
        u["chunks"] = ids;
        u["n_prefill"] = pu.unit.n_prefill;
        u["sequences"] = pu.unit.sequences;
        u["f2b"] = pu.f2b;
        u["ladder"] = pu.ladder;
        u["recompute_seconds"] = pu.recompute_seconds;
        u["transition_cost"] = pu.transition_cost;
        // Expanded per-(stage, chunk) checkpoint layers, stage-major.
        nlohmann::json ckpt = nlohmann::json::array();
        for (int p = 1; p <= static_cast<int>(config.cluster.pp_degree); ++p) {
            std::vector<int> row;
            for (int k = 0; k < pu.unit.size(); ++k)
                row.push_back(expand_checkpoint(pu.ladder, p, k, pu.f2b,
                                                config.cluster.pp_degree));
            ckpt.push_back(row);
        }
        u["ckpt"] = ckpt;
        units.push_back(std::move(u));
    }
    doc["units"] = units;
    return doc;
}

SchedulePlan plan_from_json(const nlohmann::json& doc, SystemConfig& config_out) {
    try {
        if (!doc.contains("version") || doc.at("kind").get<std::string>() != "plan")
            throw ParseError("not a plan document");
        if (doc.at("version").get<int>() != kPlanDocVersion)
            throw ParseError("unsupported plan document version " +
                             doc.at("version").dump());

        config_out = SystemConfig::from_json(doc.at("config"));

        SchedulePlan plan;
        plan.mode = plan_mode_from_string(doc.at("mode").get<std::string>());
        plan.slices = doc.at("slices").get<int>();
        plan.auto_slices = doc.at("auto_slices").get<bool>();
        plan.candidates_tried = doc.at("candidates_tried").get<int>();
        plan.delta = doc.at("delta").get<double>();
        plan.est_cost = doc.at("est_cost").get<double>();
        plan.work_seconds = doc.at("work_seconds").get<double>();
        plan.chunking.time_rsd = doc.at("metrics").at("time_rsd").get<double>();
        plan.chunking.length_rsd =
            doc.at("metrics").at("length_rsd").get<double>();
        plan.chunking.mesh.slice_lengths =
            doc.at("mesh").at("slice_lengths").get<std::vector<long long>>();
        plan.chunking.mesh.time_threshold =
            doc.at("mesh").at("time_threshold").get<double>();
        plan.chunking.mesh.token_threshold =
            doc.at("mesh").at("token_threshold").get<long long>();
        plan.chunking.final_time_threshold =
            doc.at("mesh").at("final_time_threshold").get<double>();

        std::map<int, Chunk> by_id;
        for (const auto& cj : doc.at("chunks")) {
            Chunk c = chunk_from_json(cj);
            plan.chunking.chunks.push_back(c);
            by_id[c.id] = std::move(c);
        }
        plan.chunking.per_sequence =
            doc.at("per_sequence").get<std::vector<std::vector<int>>>();

        for (const auto& uj : doc.at("units")) {
            PlannedUnit pu;
            for (int id : uj.at("chunks").get<std::vector<int>>()) {
                auto it = by_id.find(id);
                if (it == by_id.end())
                    throw ParseError("unit references unknown chunk " +
                                     std::to_string(id));
                pu.unit.chunks.push_back(it->second);
            }
            pu.unit.n_prefill = uj.at("n_prefill").get<int>();
            pu.unit.sequences = uj.at("sequences").get<std::vector<int>>();
            pu.f2b = uj.at("f2b").get<std::vector<int>>();
            pu.ladder = uj.at("ladder").get<std::vector<int>>();
            pu.recompute_seconds = uj.at("recompute_seconds").get<double>();
            pu.transition_cost = uj.at("transition_cost").get<double>();
            plan.units.push_back(std::move(pu));
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad plan document: ") + e.what());
    }
}

nlohmann::json trace_to_json(const std::vector<SimTrace>& traces) {
    nlohmann::json doc;
    doc["version"] = kTraceDocVersion;
    doc["kind"] = "trace";

    double total = 0, busy = 0, weighted = 0;
    nlohmann::json units = nlohmann::json::array();
    for (const SimTrace& t : traces) {
        nlohmann::json u;
        u["makespan"] = t.makespan;
        u["bubble_ratio"] = t.bubble_ratio;
        u["peak_memory"] = t.peak_memory;
        u["capacity_violation"] = t.capacity_violation;
        nlohmann::json events = nlohmann::json::array();
        for (const SimEvent& e : t.events) {
            events.push_back({{"stage", e.stage},
                              {"chunk", e.chunk_id},
                              {"pos", e.chunk_pos},
                              {"op", to_string(e.kind)},
                              {"start", e.start},
                              {"end", e.end}});
            busy += e.end - e.start;
        }
        u["events"] = std::move(events);
        nlohmann::json series = nlohmann::json::array();
        for (const auto& stage_series : t.memory_series) {
            nlohmann::json s = nlohmann::json::array();
            for (const auto& [time, bytes] : stage_series)
                s.push_back({time, bytes});
            series.push_back(std::move(s));
        }
        u["memory"] = std::move(series);
        units.push_back(std::move(u));
        total += t.makespan;
        weighted += t.makespan * static_cast<double>(t.peak_memory.size());
    }
    doc["units"] = std::move(units);
    doc["total_seconds"] = total;
    doc["bubble_ratio"] = weighted > 0 ? 1.0 - busy / weighted : 0.0;
    return doc;
}

std::vector<SimTrace> trace_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.contains("version") ||
            doc.at("kind").get<std::string>() != "trace")
            throw ParseError("not a trace document");
        if (doc.at("version").get<int>() != kTraceDocVersion)
            throw ParseError("unsupported trace document version " +
                             doc.at("version").dump());
        std::vector<SimTrace> out;
        for (const auto& uj : doc.at("units")) {
            SimTrace t;
            t.makespan = uj.at("makespan").get<double>();
            t.bubble_ratio = uj.at("bubble_ratio").get<double>();
            t.peak_memory = uj.at("peak_memory").get<std::vector<double>>();
            t.capacity_violation =
                uj.at("capacity_violation").get<std::vector<bool>>();
            for (const auto& ej : uj.at("events")) {
                SimEvent e;
                e.stage = ej.at("stage").get<int>();
                e.chunk_id = ej.at("chunk").get<int>();
                e.chunk_pos = ej.at("pos").get<int>();
                const std::string op = ej.at("op").get<std::string>();
                if (op == "F")
                    e.kind = EventKind::Forward;
                else if (op == "B")
                    e.kind = EventKind::Backward;
                else if (op == "R")
                    e.kind = EventKind::Recompute;
                else
                    throw ParseError("unknown event op: " + op);
                e.start = ej.at("start").get<double>();
                e.end = ej.at("end").get<double>();
                t.events.push_back(e);
            }
            for (const auto& sj : uj.at("memory")) {
                std::vector<std::pair<double, double>> series;
                for (const auto& pt : sj)
                    series.emplace_back(pt.at(0).get<double>(),
                                        pt.at(1).get<double>());
                t.memory_series.push_back(std::move(series));
            }
            out.push_back(std::move(t));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad trace document: ") + e.what());
    }
}

std::string dump_document(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return doc;
}

}  // namespace

void write_plan(const std::string& path, const SchedulePlan& plan,
                const SystemConfig& config) {
    write_text(path, dump_document(plan_to_json(plan, config)));
}

SchedulePlan read_plan(const std::string& path, SystemConfig& config_out) {
    return plan_from_json(read_json(path), config_out);
}

void write_trace(const std::string& path, const std::vector<SimTrace>& traces) {
    write_text(path, dump_document(trace_to_json(traces)));
}

std::vector<SimTrace> read_trace(const std::string& path) {
    return trace_from_json(read_json(path));
}

}  // namespace epp

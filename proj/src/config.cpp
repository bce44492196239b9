// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/config.hpp"

#include <fstream>

namespace epp {

void ClusterConfig::validate() const {
    if (pp_degree < 1 || sp_degree < 1)
        throw ConfigError("pp_degree and sp_degree must be >= 1");
    if (num_gpus != pp_degree * sp_degree)
        throw ConfigError("num_gpus must equal pp_degree * sp_degree");
    if (mem_capacity <= 0) throw ConfigError("mem_capacity must be positive");
    for (const auto& [deg, bw] : a2a_bandwidth)
        if (bw <= 0) throw ConfigError("all2all bandwidth entries must be positive");
    for (const auto& [deg, lat] : a2a_latency)
        if (lat < 0) throw ConfigError("all2all latency entries must be non-negative");
}

void ModelConfig::validate(const ClusterConfig& cluster) const {
    if (layers <= 0 || hidden_dim <= 0)
        throw ConfigError("layers and hidden_dim must be positive");
    if (layers % cluster.pp_degree != 0)
        throw ConfigError("layers must be divisible by pp_degree");
    if (elem_bytes <= 0) throw ConfigError("elem_bytes must be positive");
    if (token_act_bytes <= 0) throw ConfigError("token_act_bytes must be positive");
    if (stage_state_bytes.size() != static_cast<size_t>(cluster.pp_degree))
        throw ConfigError("stage_state_bytes needs one entry per pipeline stage");
    for (double b : stage_state_bytes)
        if (b < 0) throw ConfigError("stage_state_bytes entries must be non-negative");
}

void CostParams::validate() const {
    for (const PhaseCoeffs* c : {&forward, &backward}) {
        if (c->sec_per_token2 < 0 || c->sec_per_token < 0 || c->sec_fixed < 0)
            throw ConfigError("cost coefficients must be non-negative");
    }
    if (layer_fwd_seconds < 0)
        throw ConfigError("layer_fwd_seconds must be non-negative");
}

void SystemConfig::validate() const {
    cluster.validate();
    model.validate(cluster);
    cost.validate();
}

namespace {

std::map<int, double> degree_map(const nlohmann::json& obj, const char* what) {
    std::map<int, double> out;
    if (!obj.is_object()) throw ConfigError(std::string(what) + " must be a map");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        int degree = 0;
        try {
            degree = std::stoi(it.key());
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": key '" + it.key() +
                              "' is not a degree");
        }
        out[degree] = it.value().get<double>();
    }
    return out;
}

nlohmann::json degree_map_json(const std::map<int, double>& m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [deg, v] : m) out[std::to_string(deg)] = v;
    return out;
}

}  // namespace

SystemConfig SystemConfig::from_json(const nlohmann::json& doc) {
    SystemConfig cfg;
    try {
        const auto& cl = doc.at("cluster");
        cfg.cluster.num_gpus = cl.at("num_gpus").get<int>();
        cfg.cluster.pp_degree = cl.at("pp_degree").get<int>();
        cfg.cluster.sp_degree = cl.at("sp_degree").get<int>();
        cfg.cluster.mem_capacity = cl.at("mem_capacity").get<double>();
        if (cl.contains("all2all_bandwidth"))
            cfg.cluster.a2a_bandwidth = degree_map(cl.at("all2all_bandwidth"),
                                                   "all2all_bandwidth");
        if (cl.contains("all2all_latency"))
            cfg.cluster.a2a_latency = degree_map(cl.at("all2all_latency"),
                                                 "all2all_latency");

        const auto& mo = doc.at("model");
        cfg.model.layers = mo.at("layers").get<int>();
        cfg.model.hidden_dim = mo.at("hidden_dim").get<int>();
        cfg.model.elem_bytes = mo.at("elem_bytes").get<double>();
        cfg.model.token_act_bytes = mo.at("token_act_bytes").get<double>();
        cfg.model.stage_state_bytes =
            mo.at("stage_state_bytes").get<std::vector<double>>();

        const auto& co = doc.at("cost");
        cfg.cost.forward.sec_per_token2 = co.at("fwd_sec_per_token2").get<double>();
        cfg.cost.forward.sec_per_token = co.at("fwd_sec_per_token").get<double>();
        cfg.cost.forward.sec_fixed = co.at("fwd_sec_fixed").get<double>();
        cfg.cost.backward.sec_per_token2 = co.at("bwd_sec_per_token2").get<double>();
        cfg.cost.backward.sec_per_token = co.at("bwd_sec_per_token").get<double>();
        cfg.cost.backward.sec_fixed = co.at("bwd_sec_fixed").get<double>();
        if (co.contains("layer_fwd_seconds"))
            cfg.cost.layer_fwd_seconds = co.at("layer_fwd_seconds").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad configuration document: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json SystemConfig::to_json() const {
    nlohmann::json doc;
    doc["cluster"] = {
        {"num_gpus", cluster.num_gpus},
        {"pp_degree", cluster.pp_degree},
        {"sp_degree", cluster.sp_degree},
        {"mem_capacity", cluster.mem_capacity},
        {"all2all_bandwidth", degree_map_json(cluster.a2a_bandwidth)},
        {"all2all_latency", degree_map_json(cluster.a2a_latency)},
    };
    doc["model"] = {
        {"layers", model.layers},
        {"hidden_dim", model.hidden_dim},
        {"elem_bytes", model.elem_bytes},
        {"token_act_bytes", model.token_act_bytes},
        {"stage_state_bytes", model.stage_state_bytes},
    };
    doc["cost"] = {
        {"fwd_sec_per_token2", cost.forward.sec_per_token2},
        {"fwd_sec_per_token", cost.forward.sec_per_token},
        {"fwd_sec_fixed", cost.forward.sec_fixed},
        {"bwd_sec_per_token2", cost.backward.sec_per_token2},
        {"bwd_sec_per_token", cost.backward.sec_per_token},
        {"bwd_sec_fixed", cost.backward.sec_fixed},
        {"layer_fwd_seconds", cost.layer_fwd_seconds},
    };
    return doc;
}

SystemConfig SystemConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open configuration file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("configuration " + path + ": " + e.what());
    }
    return from_json(doc);
}

}  // namespace epp

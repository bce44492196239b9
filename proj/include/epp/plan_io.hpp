// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "epp/planner.hpp"

namespace epp {

// Versioned plan and trace documents. Serialization is deterministic (keys
// sorted, shortest round-trip float form), so identical inputs produce
// byte-identical files and documents survive read -> write unchanged.

inline constexpr int kPlanDocVersion = 1;
inline constexpr int kTraceDocVersion = 1;

nlohmann::json plan_to_json(const SchedulePlan& plan, const SystemConfig& config);
SchedulePlan plan_from_json(const nlohmann::json& doc, SystemConfig& config_out);

void write_plan(const std::string& path, const SchedulePlan& plan,
                const SystemConfig& config);
SchedulePlan read_plan(const std::string& path, SystemConfig& config_out);

nlohmann::json trace_to_json(const std::vector<SimTrace>& traces);
std::vector<SimTrace> trace_from_json(const nlohmann::json& doc);

void write_trace(const std::string& path, const std::vector<SimTrace>& traces);
std::vector<SimTrace> read_trace(const std::string& path);

std::string dump_document(const nlohmann::json& doc);

}  // namespace epp

// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "epp/pipeline.hpp"

namespace epp {

/// Static Gantt chart of simulated units: one lane per stage with
/// forward/backward/recompute bars, a memory sparkline per stage, and a
/// labeled time axis. Plain SVG, no dependencies.
std::string render_svg(const std::vector<SimTrace>& traces);

}  // namespace epp

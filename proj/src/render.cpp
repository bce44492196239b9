// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0

#include "epp/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace epp {

namespace {

const char* fill_for(EventKind kind) {
    switch (kind) {
        case EventKind::Forward: return "#4e79a7";
        case EventKind::Backward: return "#59a14f";
        case EventKind::Recompute: return "#e15759";
    }
    return "#888888";
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

}  // namespace

std::string render_svg(const std::vector<SimTrace>& traces) {
    if (traces.empty()) throw ContractError("nothing to render: empty trace");
    for (const SimTrace& t : traces)
        if (t.events.empty()) throw ContractError("nothing to render: empty trace");

    constexpr double kPlotW = 1100.0;
    constexpr double kLeft = 70.0;
    constexpr double kLaneH = 22.0;
    constexpr double kSparkH = 14.0;
    constexpr double kLaneGap = 6.0;
    constexpr double kUnitGap = 34.0;
    constexpr double kTop = 28.0;

    double max_time = 0;
    for (const SimTrace& t : traces) max_time = std::max(max_time, t.makespan);
    if (max_time <= 0) throw ContractError("trace has zero duration");
    const double xscale = kPlotW / max_time;

    std::ostringstream svg;
    double y = kTop;
    std::ostringstream body;

    for (size_t u = 0; u < traces.size(); ++u) {
        const SimTrace& t = traces[u];
        const int stages = static_cast<int>(t.peak_memory.size());
        body << "<text x=\"" << kLeft << "\" y=\"" << y - 8
             << "\" class=\"label\">unit " << u
             << "  makespan=" << fmt(t.makespan)
             << "s  bubble=" << fmt(100 * t.bubble_ratio) << "%</text>\n";

        for (int p = 1; p <= stages; ++p) {
            const double lane_y = y + (p - 1) * (kLaneH + kSparkH + kLaneGap);
            body << "<text x=\"4\" y=\"" << lane_y + kLaneH - 6
                 << "\" class=\"label\">stage " << p << "</text>\n";
            body << "<rect x=\"" << kLeft << "\" y=\"" << lane_y << "\" width=\""
                 << kPlotW << "\" height=\"" << kLaneH
                 << "\" fill=\"#f2f2f2\"/>\n";
        }
        for (const SimEvent& e : t.events) {
            const double lane_y = y + (e.stage - 1) * (kLaneH + kSparkH + kLaneGap);
            const double x = kLeft + e.start * xscale;
            const double w = std::max(0.5, (e.end - e.start) * xscale);
            body << "<rect class=\"bar\" x=\"" << fmt(x) << "\" y=\""
                 << fmt(lane_y) << "\" width=\"" << fmt(w) << "\" height=\""
                 << kLaneH << "\" fill=\"" << fill_for(e.kind)
                 << "\"><title>chunk " << e.chunk_id << " " << to_string(e.kind)
                 << " [" << fmt(e.start) << ", " << fmt(e.end)
                 << "]</title></rect>\n";
        }
        // Memory sparklines, one per stage, normalized to the stage peak.
        for (int p = 1; p <= stages; ++p) {
            const double lane_y = y + (p - 1) * (kLaneH + kSparkH + kLaneGap);
            const double spark_y = lane_y + kLaneH + 2;
            const auto& series = t.memory_series[static_cast<size_t>(p - 1)];
            const double peak = std::max(1.0, t.peak_memory[p - 1]);
            std::ostringstream pts;
            double prev_y = spark_y + kSparkH;
            for (size_t i = 0; i < series.size(); ++i) {
                const double px = kLeft + series[i].first * xscale;
                const double py =
                    spark_y + kSparkH * (1.0 - series[i].second / peak);
                if (i > 0) pts << " " << fmt(px) << "," << fmt(prev_y);
                pts << " " << fmt(px) << "," << fmt(py);
                prev_y = py;
            }
            pts << " " << fmt(kLeft + t.makespan * xscale) << "," << fmt(prev_y);
            body << "<polyline class=\"mem\" points=\"" << pts.str()
                 << "\" fill=\"none\" stroke=\"#b07aa1\" stroke-width=\"1\"/>\n";
        }
        y += stages * (kLaneH + kSparkH + kLaneGap) + kUnitGap;
    }

    // Time axis with ten labeled ticks.
    const double axis_y = y - kUnitGap + 6;
    body << "<line x1=\"" << kLeft << "\" y1=\"" << axis_y << "\" x2=\""
         << kLeft + kPlotW << "\" y2=\"" << axis_y
         << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 10; ++i) {
        const double tx = kLeft + kPlotW * i / 10.0;
        body << "<line x1=\"" << fmt(tx) << "\" y1=\"" << axis_y << "\" x2=\""
             << fmt(tx) << "\" y2=\"" << axis_y + 4
             << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        body << "<text x=\"" << fmt(tx) << "\" y=\"" << axis_y + 16
             << "\" class=\"tick\">" << fmt(max_time * i / 10.0) << "s</text>\n";
    }

    const double height = axis_y + 24;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
        << kLeft + kPlotW + 20 << "\" height=\"" << height << "\">\n"
        << "<style>.label{font:11px sans-serif;fill:#333}"
        << ".tick{font:9px sans-serif;fill:#555;text-anchor:middle}</style>\n"
        << body.str() << "</svg>\n";
    return svg.str();
}

}  // namespace epp

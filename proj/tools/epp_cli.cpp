// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: generate workloads, build plans, simulate them,
// compare ablation planners, and render Gantt charts.

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "epp/plan_io.hpp"
#include "epp/planner.hpp"
#include "epp/render.hpp"
#include "epp/workload.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

struct GenArgs {
    std::string preset = "github_like";
    int count = 512;
    std::uint64_t seed = 0;
    long long context_cap = 196608;
    long long min_len = 1;
    long long max_len = 0;
    std::string out;
};

struct PlanArgs {
    std::string workload;
    std::string config;
    int slices = 0;  // 0 = auto
    std::string mode = "main";
    int jobs = 1;
    long long context_cap = 196608;
    std::string out;
};

struct SimArgs {
    std::string plan;
    std::string out;
};

struct CompareArgs {
    std::string workload;
    std::string config;
    std::string modes = "main,no_wbc,no_ckpt,full_ckpt";
    int slices = 0;
    int jobs = 1;
    long long context_cap = 196608;
    std::string out;
};

struct RenderArgs {
    std::string trace;
    std::string out;
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw epp::IoError("cannot write: " + path);
    out << text;
    if (!out) throw epp::IoError("write failed: " + path);
}

int run_gen(const GenArgs& a) {
    epp::GeneratorOptions opts;
    opts.uniform_min = a.min_len;
    opts.uniform_max = a.max_len;
    const epp::Workload w =
        epp::generate_workload(a.preset, a.count, a.seed, a.context_cap, opts);
    std::ostringstream text;
    for (long long len : w.lengths) text << len << "\n";
    write_file(a.out, text.str());
    std::cout << "wrote " << w.lengths.size() << " lengths to " << a.out << "\n";
    std::cout << epp::format_stats(epp::workload_stats(w));
    return 0;
}

void print_plan_report(const epp::SchedulePlan& plan, double wall_seconds) {
    double recompute = 0;
    for (const epp::PlannedUnit& u : plan.units) recompute += u.recompute_seconds;
    std::cout << "mode             " << epp::to_string(plan.mode) << "\n"
              << "slices           " << plan.slices
              << (plan.auto_slices ? " (auto)" : "") << "\n"
              << "chunks           " << plan.chunking.chunks.size() << "\n"
              << "units            " << plan.units.size() << "\n"
              << "delta            " << plan.delta << " s\n"
              << "recompute_total  " << recompute << " s\n"
              << "est_cost         " << plan.est_cost << " s\n"
              << "time_rsd         " << plan.chunking.time_rsd << "\n"
              << "length_rsd       " << plan.chunking.length_rsd << "\n"
              << "solve_wall       " << wall_seconds << " s\n";
    for (size_t i = 0; i < plan.units.size(); ++i) {
        const epp::PlannedUnit& u = plan.units[i];
        long long layers = 0;
        for (int v : u.ladder) layers += v;
        std::cout << "  unit " << i << ": chunks=" << u.unit.size()
                  << " n_prefill=" << u.unit.n_prefill
                  << " ckpt_layers=" << layers
                  << " t_ckpt=" << u.recompute_seconds << " s\n";
    }
}

int run_plan(const PlanArgs& a) {
    const epp::SystemConfig config = epp::SystemConfig::load(a.config);
    const epp::Workload w = epp::load_workload(a.workload, a.context_cap);
    const std::optional<int> slices =
        a.slices > 0 ? std::optional<int>(a.slices) : std::nullopt;

    const auto t0 = std::chrono::steady_clock::now();
    const epp::SchedulePlan plan =
        epp::make_plan(w.lengths, slices, config,
                       epp::plan_mode_from_string(a.mode), a.jobs);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    epp::write_plan(a.out, plan, config);
    print_plan_report(plan, wall);
    std::cout << "plan written to " << a.out << "\n";
    return 0;
}

int run_simulate(const SimArgs& a) {
    epp::SystemConfig config;
    const epp::SchedulePlan plan = epp::read_plan(a.plan, config);
    const std::vector<epp::SimTrace> traces = epp::simulate_plan(plan, config);
    epp::write_trace(a.out, traces);

    bool violation = false;
    for (size_t i = 0; i < traces.size(); ++i) {
        const epp::SimTrace& t = traces[i];
        double peak = 0;
        for (double p : t.peak_memory) peak = std::max(peak, p);
        for (bool v : t.capacity_violation) violation = violation || v;
        std::cout << "unit " << i << ": makespan=" << t.makespan
                  << " s bubble=" << 100 * t.bubble_ratio
                  << "% peak_mem=" << peak / 1e9 << " GB\n";
    }
    std::cout << "total " << epp::plan_simulated_seconds(traces)
              << " s, capacity violations: " << (violation ? "yes" : "no")
              << "\n";
    std::cout << "trace written to " << a.out << "\n";
    return 0;
}

int run_compare(const CompareArgs& a) {
    const epp::SystemConfig config = epp::SystemConfig::load(a.config);
    const epp::Workload w = epp::load_workload(a.workload, a.context_cap);
    const std::optional<int> slices =
        a.slices > 0 ? std::optional<int>(a.slices) : std::nullopt;

    std::vector<std::string> modes;
    {
        std::stringstream ss(a.modes);
        std::string item;
        while (std::getline(ss, item, ',')) modes.push_back(item);
    }

    struct Row {
        std::string mode;
        bool feasible = false;
        double est_cost = 0;
        double sim_seconds = 0;
        double bubble = 0;
        double peak = 0;
    };
    std::vector<Row> rows;
    for (const std::string& m : modes) {
        Row row;
        row.mode = m;
        try {
            const epp::SchedulePlan plan = epp::make_plan(
                w.lengths, slices, config, epp::plan_mode_from_string(m),
                a.jobs);
            const auto traces = epp::simulate_plan(plan, config);
            const nlohmann::json tj = epp::trace_to_json(traces);
            row.feasible = true;
            row.est_cost = plan.est_cost;
            row.sim_seconds = epp::plan_simulated_seconds(traces);
            row.bubble = tj.at("bubble_ratio").get<double>();
            for (const auto& t : traces)
                for (double p : t.peak_memory) row.peak = std::max(row.peak, p);
        } catch (const epp::InfeasibleError&) {
            row.feasible = false;
        }
        rows.push_back(row);
    }

    // Normalize against main when it is present and feasible, otherwise
    // against the first feasible row.
    double base = 0;
    for (const Row& r : rows)
        if (r.feasible && r.mode == "main") base = r.sim_seconds;
    if (base == 0)
        for (const Row& r : rows)
            if (r.feasible) {
                base = r.sim_seconds;
                break;
            }

    nlohmann::json doc;
    doc["kind"] = "comparison";
    doc["version"] = 1;
    nlohmann::json jrows = nlohmann::json::array();

    std::cout << std::left << std::setw(11) << "mode" << std::right
              << std::setw(12) << "est_cost" << std::setw(12) << "sim_time"
              << std::setw(12) << "normalized" << std::setw(10) << "bubble%"
              << std::setw(10) << "peak_GB" << "\n";
    for (const Row& r : rows) {
        nlohmann::json j;
        j["mode"] = r.mode;
        j["feasible"] = r.feasible;
        if (r.feasible) {
            j["est_cost"] = r.est_cost;
            j["sim_seconds"] = r.sim_seconds;
            j["normalized"] = base > 0 ? r.sim_seconds / base : 0.0;
            j["bubble_ratio"] = r.bubble;
            j["peak_bytes"] = r.peak;
            std::cout << std::left << std::setw(11) << r.mode << std::right
                      << std::fixed << std::setprecision(3) << std::setw(12)
                      << r.est_cost << std::setw(12) << r.sim_seconds
                      << std::setw(12) << (base > 0 ? r.sim_seconds / base : 0)
                      << std::setw(10) << 100 * r.bubble << std::setw(10)
                      << r.peak / 1e9 << "\n";
        } else {
            std::cout << std::left << std::setw(11) << r.mode
                      << "  infeasible\n";
        }
        jrows.push_back(std::move(j));
    }
    doc["rows"] = std::move(jrows);
    if (!a.out.empty()) write_file(a.out, epp::dump_document(doc));
    return 0;
}

int run_render(const RenderArgs& a) {
    const std::vector<epp::SimTrace> traces = epp::read_trace(a.trace);
    write_file(a.out, epp::render_svg(traces));
    std::cout << "svg written to " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"elastic pipeline planning toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "generate a workload file");
    cgen->add_option("--preset", gen.preset,
                     "github_like | commoncrawl_like | uniform");
    cgen->add_option("--count", gen.count, "number of sequences")
        ->check(CLI::PositiveNumber);
    cgen->add_option("--seed", gen.seed, "generator seed");
    cgen->add_option("--context-cap", gen.context_cap, "truncate longer seqs");
    cgen->add_option("--min-len", gen.min_len, "uniform preset lower bound");
    cgen->add_option("--max-len", gen.max_len, "uniform preset upper bound");
    cgen->add_option("--out", gen.out, "output path")->required();

    PlanArgs plan;
    CLI::App* cplan = app.add_subcommand("plan", "build a schedule plan");
    cplan->add_option("--workload", plan.workload, "length file")->required();
    cplan->add_option("--config", plan.config, "system configuration")
        ->required();
    CLI::Option* oslices =
        cplan->add_option("--slices", plan.slices, "slice count for the longest "
                                                   "sequence");
    cplan->add_flag("--auto-slices", "sweep slice counts automatically")
        ->excludes(oslices);
    cplan->add_option("--mode", plan.mode,
                      "main | no_wbc | no_ckpt | full_ckpt");
    cplan->add_option("--jobs", plan.jobs, "solver worker threads");
    cplan->add_option("--context-cap", plan.context_cap, "truncate longer seqs");
    cplan->add_option("--out", plan.out, "plan document path")->required();

    SimArgs sim;
    CLI::App* csim = app.add_subcommand("simulate", "simulate a plan");
    csim->add_option("--plan", sim.plan, "plan document")->required();
    csim->add_option("--out", sim.out, "trace document path")->required();

    CompareArgs cmp;
    CLI::App* ccmp =
        app.add_subcommand("compare", "compare planner against ablations");
    ccmp->add_option("--workload", cmp.workload, "length file")->required();
    ccmp->add_option("--config", cmp.config, "system configuration")->required();
    ccmp->add_option("--modes", cmp.modes, "comma-separated plan modes");
    ccmp->add_option("--slices", cmp.slices, "slice count (0 = auto)");
    ccmp->add_option("--jobs", cmp.jobs, "solver worker threads");
    ccmp->add_option("--context-cap", cmp.context_cap, "truncate longer seqs");
    ccmp->add_option("--out", cmp.out, "comparison document path");

    RenderArgs ren;
    CLI::App* cren = app.add_subcommand("render", "render a trace as SVG");
    cren->add_option("--trace", ren.trace, "trace document")->required();
    cren->add_option("--out", ren.out, "svg path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : kExitUsage;
    }

    try {
        if (cgen->parsed()) return run_gen(gen);
        if (cplan->parsed()) return run_plan(plan);
        if (csim->parsed()) return run_simulate(sim);
        if (ccmp->parsed()) return run_compare(cmp);
        if (cren->parsed()) return run_render(ren);
    } catch (const epp::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const epp::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const epp::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const epp::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const epp::ContractError& e) {
        std::cerr << "invalid request: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

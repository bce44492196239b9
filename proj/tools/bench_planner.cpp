// Copyright 2026 The Elastic Pipeline Planner Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmarks the planner's transition-solving map: serial reference vs the
// OpenMP worker pool, checking that both produce identical plans.

#include <chrono>
#include <cmath>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "epp/planner.hpp"
#include "epp/workload.hpp"

namespace {

epp::SystemConfig bench_config() {
    epp::SystemConfig cfg;
    cfg.cluster.num_gpus = 32;
    cfg.cluster.pp_degree = 8;
    cfg.cluster.sp_degree = 4;
    cfg.cluster.mem_capacity = 40e9;
    cfg.cluster.a2a_bandwidth[4] = 1.5e11;
    cfg.cluster.a2a_latency[4] = 3e-5;
    cfg.model.layers = 32;
    cfg.model.hidden_dim = 4096;
    cfg.model.elem_bytes = 2;
    cfg.model.token_act_bytes = 4.194304e6;
    cfg.model.stage_state_bytes.assign(8, 3.6e9);
    cfg.model.stage_state_bytes[0] = 3.9e9;
    cfg.cost.forward = {1.75e-9, 2.1e-5, 5e-3};
    cfg.cost.backward = {3.5e-9, 4.2e-5, 8e-3};
    cfg.validate();
    return cfg;
}

double run_once(const std::vector<long long>& lengths,
                const epp::SystemConfig& cfg, int jobs, double* est_cost) {
    const auto t0 = std::chrono::steady_clock::now();
    const epp::SchedulePlan plan =
        epp::make_plan(lengths, std::nullopt, cfg, epp::PlanMode::Main, jobs);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    *est_cost = plan.est_cost;
    return wall;
}

}  // namespace

int main(int argc, char** argv) {
    int count = 512;
    int jobs = 4;
    int repeats = 3;
    if (argc > 1) count = std::atoi(argv[1]);
    if (argc > 2) jobs = std::atoi(argv[2]);
    if (argc > 3) repeats = std::atoi(argv[3]);

#ifdef _OPENMP
    std::cout << "openmp enabled, max threads " << omp_get_max_threads() << "\n";
#else
    std::cout << "openmp disabled; parallel path falls back to serial\n";
#endif

    const epp::SystemConfig cfg = bench_config();
    const epp::Workload w =
        epp::generate_workload("github_like", count, 7, 98304);

    std::cout << "sequences " << count << ", jobs " << jobs << ", repeats "
              << repeats << "\n";
    double serial_best = 1e100, parallel_best = 1e100;
    double serial_cost = 0, parallel_cost = 0;
    for (int r = 0; r < repeats; ++r) {
        serial_best = std::min(serial_best, run_once(w.lengths, cfg, 1,
                                                     &serial_cost));
        parallel_best = std::min(parallel_best, run_once(w.lengths, cfg, jobs,
                                                         &parallel_cost));
    }
    std::cout << "serial    " << serial_best << " s (est_cost " << serial_cost
              << ")\n";
    std::cout << "parallel  " << parallel_best << " s (est_cost "
              << parallel_cost << ")\n";
    std::cout << "speedup   " << serial_best / parallel_best << "x\n";
    if (serial_cost != parallel_cost) {
        std::cerr << "MISMATCH: serial and parallel plans differ\n";
        return 1;
    }
    std::cout << "plans identical\n";
    return 0;
}

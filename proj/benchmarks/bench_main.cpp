#include <benchmark/benchmark.h>

#include "wattvm/config.hpp"
#include "wattvm/controllers.hpp"
#include "wattvm/engine.hpp"
#include "wattvm/power.hpp"
#include "wattvm/pricing.hpp"

using namespace wattvm;

namespace {

const FrequencyLadder kLadder{1.0, 1.8, 2.6, 0.2};
const CubicPowerParams kCubic{150, 100, 15};

void BM_CubicPmPower(benchmark::State& state) {
    double f = 2.6, util = 0.7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pm_power_w(f, util, kCubic, kLadder));
    }
}
BENCHMARK(BM_CubicPmPower);

void BM_MulticorePmPower(benchmark::State& state) {
    const MulticorePowerParams mc = calibrate_multicore_params(kCubic, kLadder, 4);
    const std::vector<double> betas = {0.1, 0.4, 0.9};
    for (auto _ : state) {
        benchmark::DoNotOptimize(multicore_pm_power_w(0.75, betas, mc));
    }
}
BENCHMARK(BM_MulticorePmPower);

void BM_VmPrice(benchmark::State& state) {
    const PricingParams pricing;
    const VirtualMachine vm{"vm", 1, 16.0, 0.3, 0, 10};
    for (auto _ : state) {
        benchmark::DoNotOptimize(vm_price_usd_h(vm, 2.2, kLadder, pricing));
    }
}
BENCHMARK(BM_VmPrice);

SimulationConfig bench_config(int pms, int vms, int steps) {
    SimulationConfig cfg = default_config();
    cfg.inventory.count = pms;
    cfg.workload.vm_count = vms;
    cfg.steps = steps;
    cfg.seed = 99;
    return cfg;
}

// One controller invocation on a mid-size cloud snapshot.
void BM_ControllerStep(benchmark::State& state) {
    const SimulationConfig cfg = bench_config(static_cast<int>(state.range(0)),
                                              static_cast<int>(state.range(0)), 8);
    const SimulationInputs inputs = prepare_inputs(cfg);

    Inventory live;
    live.pms = inputs.base_inventory.pms;
    CloudState cloud;
    std::vector<std::string> pending;
    for (const auto& [id, pm] : live.pms) {
        cloud.frequency_ghz[id] = cfg.params.ladder.max_ghz;
        cloud.suspended.insert(id);
    }
    for (const auto& vm : inputs.workload) {
        live.vms.emplace(vm.id, vm);
        pending.push_back(vm.id);
    }
    GeoSnapshot geo;
    for (const auto& dc : cfg.datacenters) {
        geo.price_usd_per_kwh[dc.id] = inputs.prices.at(dc.id).value_at(0);
        geo.temp_c[dc.id] = inputs.temps.at(dc.id).value_at(0);
    }
    ControllerContext ctx;
    ctx.inventory = &live;
    ctx.state = &cloud;
    ctx.pending = pending;
    ctx.geo = &geo;
    ctx.params = &cfg.params;
    ctx.settings = cfg.controller;
    ctx.step_h = cfg.step_h;

    for (auto _ : state) {
        benchmark::DoNotOptimize(bcffs_controller(ctx));
    }
}
BENCHMARK(BM_ControllerStep)->Arg(50)->Arg(200);

void BM_FullSimulation(benchmark::State& state) {
    const SimulationConfig cfg = bench_config(50, 50, 24);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_simulation(cfg, ControllerKind::Bcffs));
    }
}
BENCHMARK(BM_FullSimulation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#pragma once

/// @file engine.hpp
/// Deterministic timeline simulation: arrivals/departures, controller
/// invocation, action application and the energy/cost/revenue accounting.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wattvm/controllers.hpp"
#include "wattvm/model.hpp"
#include "wattvm/traces.hpp"

namespace wattvm {

/// How the host roster is generated.
struct PmInventorySpec {
    int count = 200;
    int cores_min = 1;
    int cores_max = 4;
    double ram_min_gb = 16.0;
    double ram_max_gb = 32.0;

    void validate() const;
};

/// Where the geotemporal inputs come from.
struct TraceConfig {
    enum class ElectricityMode { Variable, Fixed, Files };
    ElectricityMode electricity_mode = ElectricityMode::Variable;
    std::string price_file;
    std::string temperature_file;

    double price_rel_amplitude = 0.12;  // diurnal swing relative to the mean
    double price_rel_noise = 0.02;
    int price_peak_hour = 18;
    double temp_amplitude_c = 5.0;
    int temp_peak_hour = 15;
    double temp_noise_c = 0.5;
    std::vector<double> dc_mean_temp_c;  // parallel to the data-center list
};

/// Complete, self-contained description of one simulation run.
struct SimulationConfig {
    int steps = 168;
    double step_h = 1.0;
    std::uint64_t seed = 42;
    std::vector<ControllerKind> controllers = {ControllerKind::Bfd, ControllerKind::Bcf,
                                               ControllerKind::Bcffs};
    ModelParams params;
    ControllerSettings controller;
    std::vector<DataCenter> datacenters;
    TraceConfig traces;
    PmInventorySpec inventory;
    WorkloadSpec workload;
    std::string workload_file;
    std::string beta_usage_file;
    double migration_energy_wh_per_gb = 10.0;
    int hist_beta_bins = 20;
    std::string out_dir = "out";
    int jobs = 0;  // sweep workers; 0 = hardware concurrency

    void validate() const;
};

/// Materialised inputs of a run: host roster, workload and traces.
struct SimulationInputs {
    Inventory base_inventory;  // all PMs, no VMs
    std::vector<VirtualMachine> workload;
    std::map<std::string, TimeSeries> prices;  // by location
    std::map<std::string, TimeSeries> temps;
};

/// Builds the deterministic inputs for a config (generation is a pure
/// function of the config and its seed).
SimulationInputs prepare_inputs(const SimulationConfig& config);

struct StepStats {
    int step = 0;
    double it_energy_kwh = 0;
    double cooling_energy_kwh = 0;
    double total_energy_kwh = 0;
    double it_cost_usd = 0;
    double total_cost_usd = 0;
    double revenue_usd = 0;
    int active_pms = 0;
    int live_vms = 0;
    int allocated_vms = 0;
    int migrations = 0;
    int unplaced = 0;
};

struct ActionLogEntry {
    int step = 0;
    std::string kind;
    std::string subject;
    std::string target;
};

/// Aggregated outcome of one run plus its per-step trail.
struct SimulationReport {
    std::string controller;
    std::string config_echo;  // effective config, embedded in every output file

    double it_energy_kwh = 0;
    double cooling_energy_kwh = 0;
    double total_energy_kwh = 0;
    double it_cost_usd = 0;
    double total_cost_usd = 0;
    double revenue_usd = 0;
    long migrations = 0;
    long unplaced_events = 0;
    std::uint64_t allocated_vm_steps = 0;

    std::vector<StepStats> per_step;
    std::vector<ActionLogEntry> actions;
    // [beta bin][ladder level] occurrence counts over allocated VM-steps.
    std::vector<std::vector<std::uint64_t>> beta_freq_histogram;

    double multicore_calibration_rms_w = 0;
    bool multicore_calibrated = false;
};

/// Optional per-step observer for tests and analyses; called after the
/// step's actions have been applied and accounted.
struct StepSnapshot {
    int step;
    const CloudState& state;
    const Inventory& inventory;
    const StepStats& stats;
};
using StepObserver = std::function<void(const StepSnapshot&)>;

/// Energy drawn by moving one VM between hosts (linear in its RAM size).
double migration_energy_wh(const VirtualMachine& vm, const SimulationConfig& config);

/// Runs one simulation with the given controller. Deterministic in
/// (config, seed); aborts with std::runtime_error on trace gaps or
/// invalid controller actions.
SimulationReport run_simulation(const SimulationConfig& config, ControllerKind controller,
                                const StepObserver& observer = {});

/// One metric of a report compared against a baseline run.
struct MetricComparison {
    double value = 0;
    double baseline = 0;
    double ratio = 0;        // value / baseline
    double savings_pct = 0;  // (1 - ratio) * 100
};

struct ComparisonRecord {
    std::string controller;
    std::string baseline;
    MetricComparison it_energy, it_cost, total_energy, total_cost, revenue;
};

/// Normalises a report against a baseline run of the same config (only
/// the controller may differ; anything else is an error).
ComparisonRecord aggregate_reports(const SimulationReport& report,
                                   const SimulationReport& baseline);

}  // namespace wattvm

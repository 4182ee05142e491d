#include "wattvm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "wattvm/config.hpp"
#include "wattvm/rng.hpp"

namespace wattvm {

namespace {
// Stream tags for deriving independent rng streams from the run seed.
constexpr std::uint64_t kStreamInventory = 1;
constexpr std::uint64_t kStreamWorkload = 2;
constexpr std::uint64_t kStreamBeta = 3;
constexpr std::uint64_t kStreamPriceBase = 4;
constexpr std::uint64_t kStreamTempBase = 100;
}  // namespace

void PmInventorySpec::validate() const {
    if (count < 1) throw std::invalid_argument("inventory: pm count must be >= 1");
    if (cores_min < 1 || cores_max < cores_min)
        throw std::invalid_argument("inventory: bad core range");
    if (ram_min_gb <= 0 || ram_max_gb < ram_min_gb)
        throw std::invalid_argument("inventory: bad ram range");
}

void SimulationConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("simulation: steps must be >= 1");
    if (step_h <= 0) throw std::invalid_argument("simulation: step_hours must be > 0");
    params.ladder.validate();
    if (params.ladder.base_ghz > params.ladder.min_ghz + 1e-9)
        throw std::invalid_argument(
            "simulation: f_base above f_min leaves the power model undefined on the ladder");
    params.power.cubic.validate();
    params.cooling.validate();
    params.pricing.validate();
    if (params.weights.cores < 0 || params.weights.ram < 0 ||
        std::abs(params.weights.cores + params.weights.ram - 1.0) > 1e-9)
        throw std::invalid_argument("model: utilisation weights must be >= 0 and sum to 1");
    controller.validate();
    if (datacenters.empty()) throw std::invalid_argument("simulation: no data centers configured");
    std::set<std::string> dc_ids;
    for (const auto& dc : datacenters) {
        dc.validate();
        if (!dc_ids.insert(dc.id).second)
            throw std::invalid_argument("simulation: duplicate data center id " + dc.id);
    }
    inventory.validate();
    if (workload_file.empty()) workload.validate();
    if (params.power.kind == PowerModelKind::Multicore && params.power.multicore) {
        std::vector<double> qs;
        for (double f : params.ladder.levels()) qs.push_back(unitless_frequency(f, params.ladder));
        params.power.multicore->validate(qs);
        if (params.power.multicore->max_cores < inventory.cores_max)
            throw std::invalid_argument(
                "power: multicore max_cores below the largest configured host");
    }
    if (traces.electricity_mode == TraceConfig::ElectricityMode::Files && traces.price_file.empty())
        throw std::invalid_argument("traces: electricity_mode=files requires price_file");
    if (!traces.dc_mean_temp_c.empty() && traces.dc_mean_temp_c.size() != datacenters.size())
        throw std::invalid_argument("traces: dc_mean_temp_c must match the data-center list");
    if (migration_energy_wh_per_gb < 0)
        throw std::invalid_argument("engine: migration_energy_wh_per_gb must be >= 0");
    if (hist_beta_bins < 1) throw std::invalid_argument("engine: hist_beta_bins must be >= 1");
}

namespace {

std::string padded_pm_id(int index, int count) {
    int width = 4;
    for (long v = count; v > 9999 && width < 12; v /= 10) ++width;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pm%0*d", width, index);
    return buf;
}

bool is_integral(double x) { return std::abs(x - std::round(x)) < 1e-9; }

std::map<std::string, PhysicalMachine> generate_pms(const SimulationConfig& config) {
    // Index-derived streams keep host rosters of different sizes nested.
    const std::uint64_t base = Rng::derive(config.seed, kStreamInventory);
    const auto& spec = config.inventory;
    const bool whole_gb = is_integral(spec.ram_min_gb) && is_integral(spec.ram_max_gb);
    std::map<std::string, PhysicalMachine> pms;
    for (int i = 0; i < spec.count; ++i) {
        Rng rng(Rng::derive(base, static_cast<std::uint64_t>(i)));
        PhysicalMachine pm;
        pm.id = padded_pm_id(i, spec.count);
        pm.cores = static_cast<int>(rng.uniform_int(spec.cores_min, spec.cores_max));
        pm.ram_gb = whole_gb ? static_cast<double>(rng.uniform_int(
                                   static_cast<long>(spec.ram_min_gb),
                                   static_cast<long>(spec.ram_max_gb)))
                             : rng.uniform(spec.ram_min_gb, spec.ram_max_gb);
        pm.location = config.datacenters[i % config.datacenters.size()].id;
        pm.validate();
        pms.emplace(pm.id, std::move(pm));
    }
    return pms;
}

int max_timezone_shift_steps(const SimulationConfig& config) {
    int max_shift = 0;
    for (const auto& dc : config.datacenters)
        max_shift = std::max(
            max_shift,
            static_cast<int>(std::abs(std::llround(dc.timezone_offset_h / config.step_h))));
    return max_shift;
}

}  // namespace

SimulationInputs prepare_inputs(const SimulationConfig& config) {
    config.validate();
    SimulationInputs inputs;
    inputs.base_inventory.pms = generate_pms(config);

    // Workload: file-backed or generated, with the beta source resolved first.
    if (!config.workload_file.empty()) {
        inputs.workload = load_workload_csv(config.workload_file);
    } else {
        WorkloadSpec spec = config.workload;
        spec.sim_steps = config.steps;
        if (!config.beta_usage_file.empty()) {
            spec.beta.kind = BetaSource::Kind::FromFile;
            spec.beta.file_values = betas_from_usage_csv(config.beta_usage_file);
            spec.beta.next = 0;
        }
        Rng rng(Rng::derive(config.seed, kStreamWorkload));
        Rng beta_rng(Rng::derive(config.seed, kStreamBeta));
        inputs.workload = generate_workload(spec, rng, beta_rng);
    }

    // Electricity prices.
    switch (config.traces.electricity_mode) {
        case TraceConfig::ElectricityMode::Fixed:
            for (const auto& dc : config.datacenters)
                inputs.prices.emplace(dc.id, fixed_prices(dc, config.steps));
            break;
        case TraceConfig::ElectricityMode::Variable: {
            const int shift = max_timezone_shift_steps(config);
            double mean_sum = 0;
            for (const auto& dc : config.datacenters) mean_sum += dc.mean_price_usd_per_kwh;
            const TimeSeries base = diurnal_price_base(
                -shift, config.steps - 1 + shift, mean_sum / config.datacenters.size(),
                config.traces.price_rel_amplitude, config.traces.price_peak_hour,
                config.traces.price_rel_noise, Rng::derive(config.seed, kStreamPriceBase),
                config.step_h);
            for (const auto& dc : config.datacenters)
                inputs.prices.emplace(dc.id,
                                      synthesize_prices(base, dc, config.steps, config.step_h));
            break;
        }
        case TraceConfig::ElectricityMode::Files: {
            for (auto& series : load_timeseries_csv(config.traces.price_file,
                                                    TraceKind::ElectricityPrice))
                inputs.prices.emplace(series.location, std::move(series));
            break;
        }
    }

    // Temperatures: file-backed when given, synthetic otherwise.
    if (!config.traces.temperature_file.empty()) {
        for (auto& series :
             load_timeseries_csv(config.traces.temperature_file, TraceKind::Temperature))
            inputs.temps.emplace(series.location, std::move(series));
    } else {
        for (size_t i = 0; i < config.datacenters.size(); ++i) {
            const auto& dc = config.datacenters[i];
            const double mean_temp =
                config.traces.dc_mean_temp_c.empty() ? 12.0 : config.traces.dc_mean_temp_c[i];
            inputs.temps.emplace(
                dc.id, diurnal_temperatures(dc, mean_temp, config.steps,
                                            config.traces.temp_amplitude_c,
                                            config.traces.temp_peak_hour,
                                            config.traces.temp_noise_c,
                                            Rng::derive(config.seed, kStreamTempBase + i),
                                            config.step_h));
        }
    }

    for (const auto& dc : config.datacenters) {
        if (inputs.prices.find(dc.id) == inputs.prices.end())
            throw std::runtime_error("traces: no electricity prices for location " + dc.id);
        if (inputs.temps.find(dc.id) == inputs.temps.end())
            throw std::runtime_error("traces: no temperatures for location " + dc.id);
    }
    return inputs;
}

double migration_energy_wh(const VirtualMachine& vm, const SimulationConfig& config) {
    return vm.ram_gb * config.migration_energy_wh_per_gb;
}

SimulationReport run_simulation(const SimulationConfig& config, ControllerKind controller,
                                const StepObserver& observer) {
    SimulationInputs inputs = prepare_inputs(config);

    // Resolve the power model: multicore coefficients are calibrated against
    // the cubic anchors when not supplied.
    ModelParams params = config.params;
    SimulationReport report;
    if (params.power.kind == PowerModelKind::Multicore && !params.power.multicore) {
        int max_cores = 1;
        for (const auto& [id, pm] : inputs.base_inventory.pms)
            max_cores = std::max(max_cores, pm.cores);
        params.power.multicore =
            calibrate_multicore_params(params.power.cubic, params.ladder, max_cores);
        report.multicore_calibration_rms_w = params.power.multicore->calibration_rms_w;
        report.multicore_calibrated = true;
    }

    report.controller = controller_name(controller);
    report.config_echo = serialize_config(config, controller);
    report.beta_freq_histogram.assign(
        config.hist_beta_bins, std::vector<std::uint64_t>(params.ladder.level_count(), 0));

    // Timeline indexes.
    std::map<int, std::vector<const VirtualMachine*>> boots, deletes;
    for (const auto& vm : inputs.workload) {
        if (vm.boot_step < config.steps) {
            boots[vm.boot_step].push_back(&vm);
            deletes[vm.delete_step].push_back(&vm);
        }
    }

    Inventory live;
    live.pms = inputs.base_inventory.pms;

    CloudState state;
    for (const auto& [pm_id, pm] : live.pms) {
        state.frequency_ghz[pm_id] = params.ladder.max_ghz;
        state.suspended.insert(pm_id);
    }

    std::vector<std::string> deferred;

    for (int t = 0; t < config.steps; ++t) {
        // Departures, then arrivals.
        if (auto it = deletes.find(t); it != deletes.end()) {
            for (const VirtualMachine* vm : it->second) {
                state.allocation.erase(vm->id);
                live.vms.erase(vm->id);
            }
        }
        std::vector<std::string> pending;
        for (const auto& vm_id : deferred)
            if (live.vms.count(vm_id) > 0) pending.push_back(vm_id);
        if (auto it = boots.find(t); it != boots.end()) {
            for (const VirtualMachine* vm : it->second) {
                live.vms.emplace(vm->id, *vm);
                pending.push_back(vm->id);
            }
        }
        std::sort(pending.begin(), pending.end());

        GeoSnapshot geo;
        for (const auto& dc : config.datacenters) {
            try {
                geo.price_usd_per_kwh[dc.id] = inputs.prices.at(dc.id).value_at(t);
                geo.temp_c[dc.id] = inputs.temps.at(dc.id).value_at(t);
            } catch (const std::out_of_range& e) {
                throw std::runtime_error(std::string("step ") + std::to_string(t) + ": " +
                                         e.what());
            }
        }

        ControllerContext ctx;
        ctx.inventory = &live;
        ctx.state = &state;
        ctx.pending = pending;
        ctx.geo = &geo;
        ctx.params = &params;
        ctx.settings = config.controller;
        ctx.step_h = config.step_h;

        const ControllerResult result = run_controller(controller, ctx);

        // Apply, remembering each migration's source host for the overhead.
        std::vector<std::pair<const VirtualMachine*, std::string>> moved;
        for (const Action& action : result.actions) {
            if (action.kind == Action::Kind::Migrate)
                moved.emplace_back(&live.vms.at(action.subject),
                                   state.allocation.at(action.subject));
            apply_action(state, action, live, params.ladder);
        }
        const auto violations = validate_state(state, live, params.ladder);
        if (!violations.empty()) {
            std::ostringstream os;
            os << "controller produced an invalid state at step " << t << ":";
            for (const auto& v : violations) os << "\n  [" << v.code << "] " << v.message;
            throw std::runtime_error(os.str());
        }

        for (const Action& action : result.actions) {
            ActionLogEntry entry{t, kind_name(action.kind), action.subject, action.target_pm};
            if (action.kind == Action::Kind::SetFrequency) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.10g", action.target_freq_ghz);
                entry.target = buf;
            }
            report.actions.push_back(std::move(entry));
        }
        for (const auto& vm_id : result.unplaced)
            report.actions.push_back({t, "unplaceable", vm_id, ""});

        // Accounting: energy and cost per active host, migration overhead,
        // then revenue per allocated VM.
        StepStats st;
        st.step = t;
        const auto hosted = state.hosted_by_pm(live);
        for (const auto& [pm_id, pm] : live.pms) {
            if (state.is_suspended(pm_id)) continue;
            const auto& vms = hosted.at(pm_id);
            const double util = utilisation(pm, vms, params.weights);
            std::vector<double> core_betas;
            for (const VirtualMachine* vm : vms)
                for (int c = 0; c < vm->cores; ++c) core_betas.push_back(vm->beta);
            const double watts = pm_it_power_w(params.power, params.ladder,
                                               state.frequency_ghz.at(pm_id), util, core_betas);
            const double it_kwh = watts * config.step_h / 1000.0;
            const double factor =
                cooling_overhead_factor(geo.temp_c.at(pm.location), params.cooling);
            const double cool_kwh = it_kwh * factor;
            const double price = geo.price_usd_per_kwh.at(pm.location);
            st.it_energy_kwh += it_kwh;
            st.cooling_energy_kwh += cool_kwh;
            st.it_cost_usd += it_kwh * price;
            st.total_cost_usd += (it_kwh + cool_kwh) * price;
            st.active_pms += 1;
        }
        for (const auto& [vm, source_pm] : moved) {
            const double mig_kwh = migration_energy_wh(*vm, config) / 1000.0;
            const double price =
                geo.price_usd_per_kwh.at(live.pms.at(source_pm).location);
            st.it_energy_kwh += mig_kwh;
            st.it_cost_usd += mig_kwh * price;
            st.total_cost_usd += mig_kwh * price;
            st.migrations += 1;
        }
        st.total_energy_kwh = st.it_energy_kwh + st.cooling_energy_kwh;

        for (const auto& [vm_id, pm_id] : state.allocation) {
            const VirtualMachine& vm = live.vms.at(vm_id);
            const double f = state.frequency_ghz.at(pm_id);
            st.revenue_usd +=
                vm_price_usd_h(vm, f, params.ladder, params.pricing) * config.step_h;
            const int bin = std::min(static_cast<int>(vm.beta * config.hist_beta_bins),
                                     config.hist_beta_bins - 1);
            report.beta_freq_histogram[bin][params.ladder.index_of(f)] += 1;
            st.allocated_vms += 1;
        }
        st.live_vms = static_cast<int>(live.vms.size());
        st.unplaced = static_cast<int>(result.unplaced.size());

        report.it_energy_kwh += st.it_energy_kwh;
        report.cooling_energy_kwh += st.cooling_energy_kwh;
        report.total_energy_kwh += st.total_energy_kwh;
        report.it_cost_usd += st.it_cost_usd;
        report.total_cost_usd += st.total_cost_usd;
        report.revenue_usd += st.revenue_usd;
        report.migrations += st.migrations;
        report.unplaced_events += st.unplaced;
        report.allocated_vm_steps += st.allocated_vms;
        report.per_step.push_back(st);

        deferred = result.unplaced;
        if (observer) observer({t, state, live, st});
    }
    return report;
}

namespace {

// Config echo with the controller selection blanked, for comparability.
std::string echo_without_controller(const std::string& echo) {
    std::istringstream in(echo);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("controller =", 0) == 0 || line.rfind("controllers =", 0) == 0) continue;
        out << line << "\n";
    }
    return out.str();
}

MetricComparison compare_metric(double value, double baseline) {
    MetricComparison m;
    m.value = value;
    m.baseline = baseline;
    m.ratio = baseline != 0 ? value / baseline : (value == 0 ? 1.0 : 0.0);
    m.savings_pct = (1.0 - m.ratio) * 100.0;
    return m;
}

}  // namespace

ComparisonRecord aggregate_reports(const SimulationReport& report,
                                   const SimulationReport& baseline) {
    if (echo_without_controller(report.config_echo) !=
        echo_without_controller(baseline.config_echo))
        throw std::invalid_argument(
            "aggregate: reports come from different configurations, only the controller may "
            "differ");
    ComparisonRecord rec;
    rec.controller = report.controller;
    rec.baseline = baseline.controller;
    rec.it_energy = compare_metric(report.it_energy_kwh, baseline.it_energy_kwh);
    rec.it_cost = compare_metric(report.it_cost_usd, baseline.it_cost_usd);
    rec.total_energy = compare_metric(report.total_energy_kwh, baseline.total_energy_kwh);
    rec.total_cost = compare_metric(report.total_cost_usd, baseline.total_cost_usd);
    rec.revenue = compare_metric(report.revenue_usd, baseline.revenue_usd);
    return rec;
}

}  // namespace wattvm

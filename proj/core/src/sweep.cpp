#include "wattvm/sweep.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace wattvm {

const char* axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::PmCount: return "pm_count";
        case SweepAxis::VmCount: return "vm_count";
        case SweepAxis::Utilisation: return "utilisation";
        case SweepAxis::ElectricityMode: return "electricity_mode";
        case SweepAxis::FixedBeta: return "fixed_beta";
    }
    return "unknown";
}

SweepAxis parse_axis(const std::string& name) {
    if (name == "pm_count") return SweepAxis::PmCount;
    if (name == "vm_count") return SweepAxis::VmCount;
    if (name == "utilisation") return SweepAxis::Utilisation;
    if (name == "electricity_mode") return SweepAxis::ElectricityMode;
    if (name == "fixed_beta") return SweepAxis::FixedBeta;
    throw std::invalid_argument("unknown sweep axis '" + name +
                                "' (expected pm_count, vm_count, utilisation, electricity_mode "
                                "or fixed_beta)");
}

void SweepSpec::validate() const {
    if (values.empty()) throw std::invalid_argument("sweep: needs at least one value");
    if (controllers.empty()) throw std::invalid_argument("sweep: needs at least one controller");
}

namespace {

double parse_number(const std::string& value, const char* axis) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw std::invalid_argument(std::string("sweep axis ") + axis + ": bad value '" + value +
                                    "'");
    return v;
}

}  // namespace

SimulationConfig apply_axis_value(const SimulationConfig& base, SweepAxis axis,
                                  const std::string& value) {
    SimulationConfig cfg = base;
    switch (axis) {
        case SweepAxis::PmCount: {
            const double count = parse_number(value, "pm_count");
            if (count < 1) throw std::invalid_argument("sweep: pm_count must be >= 1");
            // VM requests scale proportionally so utilisation stays fixed.
            const double scale = count / base.inventory.count;
            cfg.inventory.count = static_cast<int>(std::llround(count));
            cfg.workload.vm_count =
                static_cast<int>(std::llround(base.workload.vm_count * scale));
            break;
        }
        case SweepAxis::VmCount:
            cfg.workload.vm_count = static_cast<int>(std::llround(parse_number(value, "vm_count")));
            break;
        case SweepAxis::Utilisation: {
            const double ratio = parse_number(value, "utilisation");
            if (ratio < 0) throw std::invalid_argument("sweep: utilisation must be >= 0");
            cfg.workload.vm_count = static_cast<int>(std::llround(ratio * cfg.inventory.count));
            break;
        }
        case SweepAxis::ElectricityMode:
            if (value == "fixed")
                cfg.traces.electricity_mode = TraceConfig::ElectricityMode::Fixed;
            else if (value == "variable")
                cfg.traces.electricity_mode = TraceConfig::ElectricityMode::Variable;
            else
                throw std::invalid_argument("sweep: electricity_mode value must be 'fixed' or "
                                            "'variable', got '" +
                                            value + "'");
            break;
        case SweepAxis::FixedBeta: {
            const double beta = parse_number(value, "fixed_beta");
            if (beta < 0 || beta > 1)
                throw std::invalid_argument("sweep: fixed_beta values must lie in [0,1]");
            cfg.workload.beta.kind = BetaSource::Kind::Fixed;
            cfg.workload.beta.fixed = beta;
            break;
        }
    }
    return cfg;
}

std::vector<SweepRow> run_sweep(const SimulationConfig& base, const SweepSpec& spec, int jobs) {
    spec.validate();
    struct Task {
        size_t value_index;
        size_t controller_index;
    };
    std::vector<Task> tasks;
    for (size_t v = 0; v < spec.values.size(); ++v)
        for (size_t c = 0; c < spec.controllers.size(); ++c) tasks.push_back({v, c});

    std::vector<SimulationReport> reports(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<size_t> next{0};

    int worker_count = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    worker_count = std::max(1, std::min<int>(worker_count, static_cast<int>(tasks.size())));

    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
            try {
                const SimulationConfig cfg =
                    apply_axis_value(base, spec.axis, spec.values[tasks[i].value_index]);
                reports[i] =
                    run_simulation(cfg, spec.controllers[tasks[i].controller_index]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    std::vector<SweepRow> rows;
    for (size_t v = 0; v < spec.values.size(); ++v) {
        const SimulationReport* bfd = nullptr;
        const SimulationReport* bcf = nullptr;
        for (size_t c = 0; c < spec.controllers.size(); ++c) {
            const SimulationReport& r = reports[v * spec.controllers.size() + c];
            if (spec.controllers[c] == ControllerKind::Bfd) bfd = &r;
            if (spec.controllers[c] == ControllerKind::Bcf) bcf = &r;
        }
        for (size_t c = 0; c < spec.controllers.size(); ++c) {
            const SimulationReport& r = reports[v * spec.controllers.size() + c];
            SweepRow row;
            row.axis_value = spec.values[v];
            row.controller = r.controller;
            row.total_cost_usd = r.total_cost_usd;
            row.total_energy_kwh = r.total_energy_kwh;
            row.revenue_usd = r.revenue_usd;
            if (bfd != nullptr && bfd->total_cost_usd != 0) {
                row.has_savings_vs_bfd = true;
                row.savings_vs_bfd = 1.0 - r.total_cost_usd / bfd->total_cost_usd;
            }
            if (bcf != nullptr && bcf->total_cost_usd != 0) {
                row.has_savings_vs_bcf = true;
                row.savings_vs_bcf = 1.0 - r.total_cost_usd / bcf->total_cost_usd;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace wattvm

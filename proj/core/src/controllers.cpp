#include "wattvm/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wattvm {

void ControllerSettings::validate() const {
    if (underutil_threshold < 0 || underutil_threshold > 1)
        throw std::invalid_argument("controller: underutil_threshold outside [0,1]");
    if (evaluation_window_h <= 0)
        throw std::invalid_argument("controller: evaluation_window_h must be > 0");
}

const char* controller_name(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Bfd: return "bfd";
        case ControllerKind::Bcf: return "bcf";
        case ControllerKind::Bcffs: return "bcffs";
    }
    return "unknown";
}

ControllerKind parse_controller(const std::string& name) {
    if (name == "bfd") return ControllerKind::Bfd;
    if (name == "bcf") return ControllerKind::Bcf;
    if (name == "bcffs") return ControllerKind::Bcffs;
    throw std::invalid_argument("unknown controller '" + name + "' (expected bfd, bcf or bcffs)");
}

double location_cost_rate(double price_usd_per_kwh, double temp_c, const CoolingParams& cooling) {
    return price_usd_per_kwh * (1.0 + cooling_overhead_factor(temp_c, cooling));
}

namespace {

double geo_value(const std::map<std::string, double>& by_location, const std::string& location,
                 const char* what) {
    auto it = by_location.find(location);
    if (it == by_location.end())
        throw std::runtime_error(std::string("no ") + what + " for location '" + location + "'");
    return it->second;
}

// Mutable packing view over the controller's working allocation.
struct Packing {
    const Inventory& inv;
    UtilWeights weights;
    std::map<std::string, std::string> alloc;  // vm -> pm
    std::map<std::string, double> used_cores;
    std::map<std::string, double> used_ram;
    std::map<std::string, int> hosted_count;
    double max_cores;
    double max_ram;

    Packing(const Inventory& inventory, const CloudState& state, UtilWeights w)
        : inv(inventory), weights(w), alloc(state.allocation) {
        for (const auto& [pm_id, pm] : inv.pms) {
            used_cores[pm_id] = 0;
            used_ram[pm_id] = 0;
            hosted_count[pm_id] = 0;
        }
        for (const auto& [vm_id, pm_id] : alloc) {
            const auto& vm = inv.vms.at(vm_id);
            used_cores[pm_id] += vm.cores;
            used_ram[pm_id] += vm.ram_gb;
            hosted_count[pm_id] += 1;
        }
        max_cores = inv.max_pm_cores();
        max_ram = inv.max_pm_ram_gb();
    }

    bool fits(const VirtualMachine& vm, const PhysicalMachine& pm) const {
        return used_cores.at(pm.id) + vm.cores <= pm.cores &&
               used_ram.at(pm.id) + vm.ram_gb <= pm.ram_gb;
    }

    void remove(const std::string& vm_id) {
        const auto it = alloc.find(vm_id);
        const auto& vm = inv.vms.at(vm_id);
        used_cores[it->second] -= vm.cores;
        used_ram[it->second] -= vm.ram_gb;
        hosted_count[it->second] -= 1;
        alloc.erase(it);
    }

    void assign(const std::string& vm_id, const std::string& pm_id) {
        const auto& vm = inv.vms.at(vm_id);
        alloc[vm_id] = pm_id;
        used_cores[pm_id] += vm.cores;
        used_ram[pm_id] += vm.ram_gb;
        hosted_count[pm_id] += 1;
    }

    double capacity_scalar(const PhysicalMachine& pm) const {
        return weights.cores * (pm.cores / max_cores) + weights.ram * (pm.ram_gb / max_ram);
    }

    double requirement_scalar(const VirtualMachine& vm) const {
        return weights.cores * (vm.cores / max_cores) + weights.ram * (vm.ram_gb / max_ram);
    }

    double free_scalar(const PhysicalMachine& pm) const {
        return weights.cores * ((pm.cores - used_cores.at(pm.id)) / max_cores) +
               weights.ram * ((pm.ram_gb - used_ram.at(pm.id)) / max_ram);
    }
};

struct PmRank {
    const PhysicalMachine* pm;
    double capacity;
    double cost;
};

// Larger hosts first, cheaper locations next, id as the final tie-break.
// Capacity is the weighted size scalar quantised into quarter classes:
// heterogeneous hosts rarely tie on the raw scalar, and without the
// coarse classes the location cost would never get to order anything.
bool capacity_cost_order(const PmRank& a, const PmRank& b) {
    if (a.capacity != b.capacity) return a.capacity > b.capacity;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.pm->id < b.pm->id;
}

double capacity_class(double capacity_scalar) {
    return std::floor(capacity_scalar * 4.0) / 4.0;
}

std::map<std::string, double> cost_by_location(const ControllerContext& ctx) {
    std::map<std::string, double> out;
    for (const auto& [loc, price] : ctx.geo->price_usd_per_kwh) {
        const double temp = geo_value(ctx.geo->temp_c, loc, "temperature");
        out[loc] = location_cost_rate(price, temp, ctx.params->cooling);
    }
    return out;
}

std::vector<std::string> sort_vms_by_requirement(const std::vector<std::string>& vm_ids,
                                                 const Packing& packing) {
    std::vector<std::string> sorted = vm_ids;
    std::sort(sorted.begin(), sorted.end(), [&](const std::string& a, const std::string& b) {
        const double ra = packing.requirement_scalar(packing.inv.vms.at(a));
        const double rb = packing.requirement_scalar(packing.inv.vms.at(b));
        if (ra != rb) return ra > rb;
        return a < b;
    });
    return sorted;
}

}  // namespace

ControllerResult bcf_migration_stage(const ControllerContext& ctx) {
    const Inventory& inv = *ctx.inventory;
    const CloudState& state = *ctx.state;
    const auto costs = cost_by_location(ctx);

    // Live working copy of the allocation: every move is checked against it
    // and executed on it immediately, so the emitted action stream is valid
    // in order and can never overcommit a host.
    Packing packing(inv, state, ctx.params->weights);

    // Mark pending VMs plus everything hosted below the utilisation threshold.
    std::vector<std::string> to_alloc = ctx.pending;
    const auto hosted = state.hosted_by_pm(inv);
    for (const auto& [pm_id, vms] : hosted) {
        if (vms.empty()) continue;
        const double util = utilisation(inv.pms.at(pm_id), vms, ctx.params->weights);
        if (util < ctx.settings.underutil_threshold) {
            for (const VirtualMachine* vm : vms) to_alloc.push_back(vm->id);
        }
    }
    to_alloc = sort_vms_by_requirement(to_alloc, packing);

    std::set<std::string> suspended = state.suspended;
    ControllerResult result;

    for (const auto& vm_id : to_alloc) {
        const VirtualMachine& vm = inv.vms.at(vm_id);
        const auto current = packing.alloc.find(vm_id);
        const std::string current_host =
            current != packing.alloc.end() ? current->second : std::string();

        std::vector<PmRank> active;
        std::vector<PmRank> inactive;
        for (const auto& [pm_id, pm] : inv.pms) {
            PmRank rank{&pm, capacity_class(packing.capacity_scalar(pm)),
                        costs.at(pm.location)};
            (packing.hosted_count.at(pm_id) > 0 ? active : inactive).push_back(rank);
        }
        std::sort(inactive.begin(), inactive.end(), capacity_cost_order);

        const PhysicalMachine* target = nullptr;
        std::size_t next_inactive = 0;
        while (target == nullptr) {
            std::sort(active.begin(), active.end(), capacity_cost_order);
            for (const PmRank& rank : active) {
                if (rank.pm->id == current_host) continue;  // moving here is a no-op
                if (packing.fits(vm, *rank.pm)) {
                    target = rank.pm;
                    break;
                }
            }
            if (target != nullptr) break;
            // Only new requests may wake a suspended host: evacuating onto an
            // empty host would never consolidate, it would ping-pong.
            if (!current_host.empty()) break;
            if (next_inactive >= inactive.size()) break;  // nothing left to activate
            active.push_back(inactive[next_inactive++]);
        }

        if (target == nullptr) {
            // A hosted VM that fits nowhere else simply stays put; a new
            // request is reported unplaceable and deferred by the engine.
            if (current_host.empty()) result.unplaced.push_back(vm_id);
            continue;
        }
        if (suspended.count(target->id) > 0) {
            result.actions.push_back(Action::resume(target->id));
            suspended.erase(target->id);
        }
        if (current_host.empty()) {
            result.actions.push_back(Action::place(vm_id, target->id));
        } else {
            result.actions.push_back(Action::migrate(vm_id, target->id));
            packing.remove(vm_id);
        }
        packing.assign(vm_id, target->id);
    }

    // Hosts left empty are powered down.
    for (const auto& [pm_id, count] : packing.hosted_count) {
        if (count == 0 && suspended.count(pm_id) == 0)
            result.actions.push_back(Action::suspend(pm_id));
    }
    return result;
}

std::vector<Action> frequency_scaling_stage(const ControllerContext& ctx,
                                            const CloudState& post_migration) {
    const Inventory& inv = *ctx.inventory;
    const FrequencyLadder& ladder = ctx.params->ladder;
    const double window_h = ctx.settings.evaluation_window_h;
    const int top = ladder.level_count() - 1;

    const auto hosted = post_migration.hosted_by_pm(inv);
    std::vector<std::string> active;
    for (const auto& [pm_id, vms] : hosted)
        if (!vms.empty()) active.push_back(pm_id);

    struct PmProfile {
        double util;
        double rate;          // effective $/kWh at the host's location
        double price;         // raw electricity price
        double temp;
        double mean_beta;
        VmRefList vms;
        std::vector<double> core_betas;
    };
    std::map<std::string, PmProfile> profiles;
    for (const auto& pm_id : active) {
        const PhysicalMachine& pm = inv.pms.at(pm_id);
        PmProfile prof;
        prof.vms = hosted.at(pm_id);
        prof.util = utilisation(pm, prof.vms, ctx.params->weights);
        prof.price = geo_value(ctx.geo->price_usd_per_kwh, pm.location, "electricity price");
        prof.temp = geo_value(ctx.geo->temp_c, pm.location, "temperature");
        prof.rate = location_cost_rate(prof.price, prof.temp, ctx.params->cooling);
        double beta_sum = 0;
        for (const VirtualMachine* vm : prof.vms) {
            beta_sum += vm->beta;
            for (int c = 0; c < vm->cores; ++c) prof.core_betas.push_back(vm->beta);
        }
        prof.mean_beta = beta_sum / static_cast<double>(prof.vms.size());
        profiles.emplace(pm_id, std::move(prof));
    }

    auto revenue_at = [&](const PmProfile& prof, int level) {
        return pm_revenue_usd_h(ladder.level(level), prof.vms, ladder, ctx.params->pricing) *
               window_h;
    };
    auto energy_cost_at = [&](const PmProfile& prof, int level) {
        const double watts = pm_it_power_w(ctx.params->power, ladder, ladder.level(level),
                                           prof.util, prof.core_betas);
        return watts / 1000.0 * window_h * prof.rate;
    };

    std::set<std::string> pruned;
    std::map<std::string, int> chosen_level;
    bool decrease_feasible = false;  // only read across hosts in literal mode

    for (const auto& pm_id : active) {
        if (pruned.count(pm_id) > 0) continue;
        const PmProfile& prof = profiles.at(pm_id);
        if (!ctx.settings.literal_feasible_flag) decrease_feasible = false;

        int level_to_apply = top;
        double revenue_cur = revenue_at(prof, level_to_apply);
        double cost_cur = energy_cost_at(prof, level_to_apply);
        for (int level = top - 1; level >= 0; --level) {
            const double revenue_new = revenue_at(prof, level);
            const double cost_new = energy_cost_at(prof, level);
            const double revenue_loss = revenue_cur - revenue_new;
            const double savings = cost_cur - cost_new;
            if (savings > revenue_loss) {
                revenue_cur = revenue_new;
                cost_cur = cost_new;
                decrease_feasible = true;
                level_to_apply = level;
            } else {
                break;
            }
        }
        chosen_level[pm_id] = level_to_apply;

        if (!decrease_feasible) {
            // Hosts that dominate a failed one on all three axes cannot have
            // a profitable first step either; drop them from consideration.
            for (const auto& other_id : active) {
                if (other_id == pm_id || pruned.count(other_id) > 0 ||
                    chosen_level.count(other_id) > 0)
                    continue;
                const PmProfile& other = profiles.at(other_id);
                if (other.mean_beta > prof.mean_beta && other.price < prof.price &&
                    other.temp < prof.temp)
                    pruned.insert(other_id);
            }
        }
    }

    std::vector<Action> actions;
    for (const auto& pm_id : active) {
        const int level = chosen_level.count(pm_id) > 0 ? chosen_level.at(pm_id) : top;
        const double current = post_migration.frequency_ghz.at(pm_id);
        if (ladder.index_of(current) != level)
            actions.push_back(Action::set_frequency(pm_id, ladder.level(level)));
    }
    return actions;
}

ControllerResult bfd_controller(const ControllerContext& ctx) {
    const Inventory& inv = *ctx.inventory;
    const CloudState& state = *ctx.state;

    Packing packing(inv, state, ctx.params->weights);
    std::vector<std::string> to_alloc = sort_vms_by_requirement(ctx.pending, packing);

    std::set<std::string> active_set;
    for (const auto& [pm_id, count] : packing.hosted_count)
        if (count > 0) active_set.insert(pm_id);

    std::set<std::string> suspended = state.suspended;
    ControllerResult result;

    for (const auto& vm_id : to_alloc) {
        const VirtualMachine& vm = inv.vms.at(vm_id);

        const PhysicalMachine* target = nullptr;
        while (true) {
            // Best fit: the active host with the least free capacity that
            // still takes the VM.
            double best_free = 0;
            for (const auto& pm_id : active_set) {
                const PhysicalMachine& pm = inv.pms.at(pm_id);
                if (!packing.fits(vm, pm)) continue;
                const double free = packing.free_scalar(pm);
                if (target == nullptr || free < best_free ||
                    (free == best_free && pm.id < target->id)) {
                    target = &pm;
                    best_free = free;
                }
            }
            if (target != nullptr) break;

            // Activate the largest inactive host and retry.
            const PhysicalMachine* largest = nullptr;
            double largest_capacity = 0;
            for (const auto& [pm_id, pm] : inv.pms) {
                if (active_set.count(pm_id) > 0) continue;
                const double capacity = packing.capacity_scalar(pm);
                if (largest == nullptr || capacity > largest_capacity ||
                    (capacity == largest_capacity && pm_id < largest->id)) {
                    largest = &pm;
                    largest_capacity = capacity;
                }
            }
            if (largest == nullptr) break;  // nothing left to activate
            active_set.insert(largest->id);
        }

        if (target == nullptr) {
            result.unplaced.push_back(vm_id);
            continue;
        }
        if (suspended.count(target->id) > 0) {
            result.actions.push_back(Action::resume(target->id));
            suspended.erase(target->id);
        }
        result.actions.push_back(Action::place(vm_id, target->id));
        packing.assign(vm_id, target->id);
    }

    for (const auto& [pm_id, count] : packing.hosted_count) {
        if (count == 0 && suspended.count(pm_id) == 0)
            result.actions.push_back(Action::suspend(pm_id));
    }
    return result;
}

ControllerResult bcf_controller(const ControllerContext& ctx) { return bcf_migration_stage(ctx); }

ControllerResult bcffs_controller(const ControllerContext& ctx) {
    ControllerResult result = bcf_migration_stage(ctx);
    if (!ctx.settings.frequency_scaling) return result;

    CloudState post = *ctx.state;
    apply_actions(post, result.actions, *ctx.inventory, ctx.params->ladder);
    std::vector<Action> scaling = frequency_scaling_stage(ctx, post);
    result.actions.insert(result.actions.end(), scaling.begin(), scaling.end());
    return result;
}

ControllerResult run_controller(ControllerKind kind, const ControllerContext& ctx) {
    ctx.settings.validate();
    switch (kind) {
        case ControllerKind::Bfd: return bfd_controller(ctx);
        case ControllerKind::Bcf: return bcf_controller(ctx);
        case ControllerKind::Bcffs: return bcffs_controller(ctx);
    }
    throw std::logic_error("unknown controller kind");
}

}  // namespace wattvm

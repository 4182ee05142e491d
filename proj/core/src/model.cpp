#include "wattvm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wattvm {

namespace {
constexpr double kFreqTolGhz = 1e-9;
}

void FrequencyLadder::validate() const {
    if (base_ghz <= 0) throw std::invalid_argument("frequency ladder: base_ghz must be > 0");
    if (step_ghz <= 0) throw std::invalid_argument("frequency ladder: step_ghz must be > 0");
    if (min_ghz > max_ghz) throw std::invalid_argument("frequency ladder: min_ghz > max_ghz");
    const double span = max_ghz - min_ghz;
    const double ratio = span / step_ghz;
    if (std::abs(ratio - std::round(ratio)) * step_ghz > kFreqTolGhz)
        throw std::invalid_argument("frequency ladder: (max - min) is not a multiple of step");
}

int FrequencyLadder::level_count() const {
    return static_cast<int>(std::round((max_ghz - min_ghz) / step_ghz)) + 1;
}

double FrequencyLadder::level(int index) const {
    if (index < 0 || index >= level_count())
        throw std::invalid_argument("frequency ladder: level index out of range");
    if (index == level_count() - 1) return max_ghz;
    return min_ghz + index * step_ghz;
}

std::vector<double> FrequencyLadder::levels() const {
    std::vector<double> out;
    out.reserve(level_count());
    for (int i = 0; i < level_count(); ++i) out.push_back(level(i));
    return out;
}

bool FrequencyLadder::contains(double f_ghz) const {
    if (f_ghz < min_ghz - kFreqTolGhz || f_ghz > max_ghz + kFreqTolGhz) return false;
    const double offset = (f_ghz - min_ghz) / step_ghz;
    return std::abs(offset - std::round(offset)) * step_ghz <= kFreqTolGhz;
}

int FrequencyLadder::index_of(double f_ghz) const {
    if (!contains(f_ghz)) {
        std::ostringstream os;
        os << "frequency " << f_ghz << " GHz is not on the ladder";
        throw std::invalid_argument(os.str());
    }
    return static_cast<int>(std::round((f_ghz - min_ghz) / step_ghz));
}

void VirtualMachine::validate() const {
    if (id.empty()) throw std::invalid_argument("vm: empty id");
    if (cores < 1) throw std::invalid_argument("vm " + id + ": cores must be >= 1");
    if (ram_gb <= 0) throw std::invalid_argument("vm " + id + ": ram_gb must be > 0");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("vm " + id + ": beta outside [0,1]");
    if (boot_step >= delete_step)
        throw std::invalid_argument("vm " + id + ": boot_step must precede delete_step");
}

void PhysicalMachine::validate() const {
    if (id.empty()) throw std::invalid_argument("pm: empty id");
    if (cores < 1) throw std::invalid_argument("pm " + id + ": cores must be >= 1");
    if (ram_gb <= 0) throw std::invalid_argument("pm " + id + ": ram_gb must be > 0");
    if (location.empty()) throw std::invalid_argument("pm " + id + ": empty location");
}

void DataCenter::validate() const {
    if (id.empty()) throw std::invalid_argument("data center: empty id");
    if (mean_price_usd_per_kwh <= 0)
        throw std::invalid_argument("data center " + id + ": mean price must be > 0");
}

double Inventory::max_pm_cores() const {
    double m = 0;
    for (const auto& [id, pm] : pms) m = std::max(m, static_cast<double>(pm.cores));
    return m;
}

double Inventory::max_pm_ram_gb() const {
    double m = 0;
    for (const auto& [id, pm] : pms) m = std::max(m, pm.ram_gb);
    return m;
}

std::map<std::string, std::vector<const VirtualMachine*>> CloudState::hosted_by_pm(
    const Inventory& inv) const {
    std::map<std::string, std::vector<const VirtualMachine*>> out;
    for (const auto& [pm_id, pm] : inv.pms) out[pm_id];
    for (const auto& [vm_id, pm_id] : allocation) {
        auto vm = inv.vms.find(vm_id);
        if (vm != inv.vms.end()) out[pm_id].push_back(&vm->second);
    }
    return out;
}

Action Action::place(std::string vm, std::string pm) {
    return {Kind::Place, std::move(vm), std::move(pm), 0, 0};
}
Action Action::migrate(std::string vm, std::string pm) {
    return {Kind::Migrate, std::move(vm), std::move(pm), 0, 0};
}
Action Action::suspend(std::string pm) { return {Kind::Suspend, std::move(pm), "", 0, 0}; }
Action Action::resume(std::string pm) { return {Kind::Resume, std::move(pm), "", 0, 0}; }
Action Action::set_frequency(std::string pm, double f_ghz) {
    return {Kind::SetFrequency, std::move(pm), "", f_ghz, 0};
}

const char* kind_name(Action::Kind kind) {
    switch (kind) {
        case Action::Kind::Place: return "place";
        case Action::Kind::Migrate: return "migrate";
        case Action::Kind::Suspend: return "suspend";
        case Action::Kind::Resume: return "resume";
        case Action::Kind::SetFrequency: return "set_frequency";
    }
    return "unknown";
}

double utilisation(const PhysicalMachine& pm, const VmRefList& hosted, const UtilWeights& weights) {
    double used_cores = 0;
    double used_ram = 0;
    for (const VirtualMachine* vm : hosted) {
        used_cores += vm->cores;
        used_ram += vm->ram_gb;
    }
    if (used_cores > pm.cores || used_ram > pm.ram_gb) {
        std::ostringstream os;
        os << "pm " << pm.id << ": hosted VMs exceed capacity (" << used_cores << "/" << pm.cores
           << " cores, " << used_ram << "/" << pm.ram_gb << " GB)";
        throw std::invalid_argument(os.str());
    }
    if (hosted.empty()) return 0.0;
    return weights.cores * (used_cores / pm.cores) + weights.ram * (used_ram / pm.ram_gb);
}

std::vector<Violation> validate_state(const CloudState& state, const Inventory& inv,
                                      const FrequencyLadder& ladder) {
    std::vector<Violation> out;
    auto add = [&out](std::string code, std::string message) {
        out.push_back({std::move(code), std::move(message)});
    };

    std::map<std::string, double> used_cores, used_ram;
    for (const auto& [vm_id, pm_id] : state.allocation) {
        auto vm = inv.vms.find(vm_id);
        if (vm == inv.vms.end()) {
            add("unknown_vm", "allocated vm " + vm_id + " is not in the inventory");
            continue;
        }
        auto pm = inv.pms.find(pm_id);
        if (pm == inv.pms.end()) {
            add("unknown_pm", "vm " + vm_id + " mapped to unknown pm " + pm_id);
            continue;
        }
        if (state.is_suspended(pm_id))
            add("suspended_host", "vm " + vm_id + " mapped to suspended pm " + pm_id);
        used_cores[pm_id] += vm->second.cores;
        used_ram[pm_id] += vm->second.ram_gb;
    }

    for (const auto& [pm_id, cores] : used_cores) {
        const auto& pm = inv.pms.at(pm_id);
        if (cores > pm.cores) {
            std::ostringstream os;
            os << "pm " << pm_id << ": core overcommit (" << cores << " > " << pm.cores << ")";
            add("core_overcommit", os.str());
        }
        if (used_ram[pm_id] > pm.ram_gb) {
            std::ostringstream os;
            os << "pm " << pm_id << ": ram overcommit (" << used_ram[pm_id] << " > " << pm.ram_gb
               << ")";
            add("ram_overcommit", os.str());
        }
    }

    for (const auto& [pm_id, pm] : inv.pms) {
        auto f = state.frequency_ghz.find(pm_id);
        if (f == state.frequency_ghz.end()) {
            add("missing_frequency", "pm " + pm_id + " has no frequency assigned");
        } else if (!ladder.contains(f->second)) {
            std::ostringstream os;
            os << "pm " << pm_id << ": off-ladder frequency " << f->second << " GHz";
            add("off_ladder_frequency", os.str());
        }
    }
    for (const auto& [pm_id, f] : state.frequency_ghz) {
        if (inv.pms.find(pm_id) == inv.pms.end())
            add("unknown_pm", "frequency assigned to unknown pm " + pm_id);
    }
    for (const auto& pm_id : state.suspended) {
        if (inv.pms.find(pm_id) == inv.pms.end())
            add("unknown_pm", "suspended set names unknown pm " + pm_id);
    }
    return out;
}

namespace {

[[noreturn]] void action_fail(const Action& action, const std::string& why) {
    std::ostringstream os;
    os << "invalid action " << kind_name(action.kind) << "(" << action.subject;
    if (!action.target_pm.empty()) os << " -> " << action.target_pm;
    if (action.kind == Action::Kind::SetFrequency) os << " -> " << action.target_freq_ghz;
    os << "): " << why;
    throw std::runtime_error(os.str());
}

}  // namespace

void apply_action(CloudState& state, const Action& action, const Inventory& inv,
                  const FrequencyLadder& ladder) {
    switch (action.kind) {
        case Action::Kind::Place: {
            auto vm = inv.vms.find(action.subject);
            if (vm == inv.vms.end()) action_fail(action, "unknown vm");
            auto pm = inv.pms.find(action.target_pm);
            if (pm == inv.pms.end()) action_fail(action, "unknown pm");
            if (state.allocation.count(action.subject) > 0)
                action_fail(action, "vm already allocated");
            if (state.is_suspended(action.target_pm)) action_fail(action, "target is suspended");
            state.allocation[action.subject] = action.target_pm;
            break;
        }
        case Action::Kind::Migrate: {
            auto vm = inv.vms.find(action.subject);
            if (vm == inv.vms.end()) action_fail(action, "unknown vm");
            auto pm = inv.pms.find(action.target_pm);
            if (pm == inv.pms.end()) action_fail(action, "unknown pm");
            auto current = state.allocation.find(action.subject);
            if (current == state.allocation.end()) action_fail(action, "vm not allocated");
            if (current->second == action.target_pm)
                action_fail(action, "migration to the current host");
            if (state.is_suspended(action.target_pm)) action_fail(action, "target is suspended");
            current->second = action.target_pm;
            break;
        }
        case Action::Kind::Suspend: {
            if (inv.pms.find(action.subject) == inv.pms.end()) action_fail(action, "unknown pm");
            if (state.is_suspended(action.subject)) action_fail(action, "already suspended");
            for (const auto& [vm_id, pm_id] : state.allocation)
                if (pm_id == action.subject) action_fail(action, "pm still hosts " + vm_id);
            state.suspended.insert(action.subject);
            break;
        }
        case Action::Kind::Resume: {
            if (inv.pms.find(action.subject) == inv.pms.end()) action_fail(action, "unknown pm");
            if (!state.is_suspended(action.subject)) action_fail(action, "pm is not suspended");
            state.suspended.erase(action.subject);
            break;
        }
        case Action::Kind::SetFrequency: {
            if (inv.pms.find(action.subject) == inv.pms.end()) action_fail(action, "unknown pm");
            if (!ladder.contains(action.target_freq_ghz))
                action_fail(action, "frequency is not on the ladder");
            state.frequency_ghz[action.subject] = action.target_freq_ghz;
            break;
        }
    }
}

void apply_actions(CloudState& state, const std::vector<Action>& actions, const Inventory& inv,
                   const FrequencyLadder& ladder) {
    for (const Action& action : actions) apply_action(state, action, inv, ladder);
}

}  // namespace wattvm

#pragma once

/// @file model.hpp
/// Domain types shared by every other module: machines, data centers,
/// the frequency ladder and the mutable cloud state, plus the validity
/// checks that guard them.

#include <map>
#include <set>
#include <string>
#include <vector>

namespace wattvm {

/// Discrete set of CPU frequencies a host may operate at.
///
/// Frequencies run from `min_ghz` to `max_ghz` in `step_ghz` increments;
/// `base_ghz` is the reference frequency shared by the power and pricing
/// models and may lie below `min_ghz`.
struct FrequencyLadder {
    double base_ghz = 1.0;
    double min_ghz = 1.8;
    double max_ghz = 2.6;
    double step_ghz = 0.2;

    /// Throws std::invalid_argument unless the ladder is well-formed
    /// (positive base and step, min <= max, span an integer multiple of step).
    void validate() const;

    /// Number of discrete levels, min through max inclusive.
    int level_count() const;

    /// Frequency of level `index` (0 = min_ghz).
    double level(int index) const;

    /// All levels in ascending order.
    std::vector<double> levels() const;

    /// Whether `f_ghz` coincides with a ladder level (1e-9 GHz tolerance).
    bool contains(double f_ghz) const;

    /// Level index of `f_ghz`; throws std::invalid_argument if off-ladder.
    int index_of(double f_ghz) const;
};

/// A user request consuming host capacity, billed per hour.
/// `beta` is the CPU-boundedness: 1 = fully CPU-bound, 0 = I/O-bound.
struct VirtualMachine {
    std::string id;
    int cores = 1;
    double ram_gb = 1.0;
    double beta = 0.0;
    int boot_step = 0;
    int delete_step = 1;

    void validate() const;
};

/// A host server with fixed capacities, located in one data center.
struct PhysicalMachine {
    std::string id;
    int cores = 1;
    double ram_gb = 1.0;
    std::string location;

    void validate() const;
};

/// A data-center site with its timezone and long-run mean electricity price.
struct DataCenter {
    std::string id;
    std::string name;
    double timezone_offset_h = 0.0;
    double mean_price_usd_per_kwh = 0.05;

    void validate() const;
};

/// Relative weights of the core and RAM fractions in host utilisation.
struct UtilWeights {
    double cores = 0.5;
    double ram = 0.5;
};

/// Host and live-VM roster the controller and engine operate on.
struct Inventory {
    std::map<std::string, PhysicalMachine> pms;
    std::map<std::string, VirtualMachine> vms;

    double max_pm_cores() const;
    double max_pm_ram_gb() const;
};

/// Mutable allocation state: which VM runs where, each host's chosen
/// frequency, and which hosts are suspended. Mutated only by the engine.
struct CloudState {
    std::map<std::string, std::string> allocation;   // vm id -> pm id
    std::map<std::string, double> frequency_ghz;     // pm id -> frequency
    std::set<std::string> suspended;                 // pm ids

    bool is_suspended(const std::string& pm_id) const { return suspended.count(pm_id) > 0; }

    /// VMs hosted per PM, for every PM in `inv` (empty vector when none).
    std::map<std::string, std::vector<const VirtualMachine*>> hosted_by_pm(const Inventory& inv) const;
};

/// One cloud-control action: initial placement, migration, host
/// suspend/resume, or a frequency change.
struct Action {
    enum class Kind { Place, Migrate, Suspend, Resume, SetFrequency };

    Kind kind = Kind::Place;
    std::string subject;         // vm id for Place/Migrate, pm id otherwise
    std::string target_pm;       // Place/Migrate destination
    double target_freq_ghz = 0;  // SetFrequency only
    int step = 0;

    static Action place(std::string vm, std::string pm);
    static Action migrate(std::string vm, std::string pm);
    static Action suspend(std::string pm);
    static Action resume(std::string pm);
    static Action set_frequency(std::string pm, double f_ghz);
};

const char* kind_name(Action::Kind kind);

/// A broken CloudState invariant, as data rather than a fault.
struct Violation {
    std::string code;
    std::string message;
};

using VmRefList = std::vector<const VirtualMachine*>;

/// Uniformly weighted fraction of a host's cores and RAM consumed by the
/// hosted VMs. Returns 0 for an empty host; throws std::invalid_argument
/// if the VMs exceed the host's capacity.
double utilisation(const PhysicalMachine& pm, const VmRefList& hosted,
                   const UtilWeights& weights = {});

/// Every violated CloudState invariant with the offending ids.
/// An empty result means the state is valid.
std::vector<Violation> validate_state(const CloudState& state, const Inventory& inv,
                                      const FrequencyLadder& ladder);

/// Applies one action, checking order-sensitive preconditions (known ids,
/// suspension, ladder membership). Capacity is a whole-batch property —
/// moves inside one step may transiently overlap — and is checked by
/// validate_state once the batch has been applied. Throws
/// std::runtime_error on a violated precondition.
void apply_action(CloudState& state, const Action& action, const Inventory& inv,
                  const FrequencyLadder& ladder);

void apply_actions(CloudState& state, const std::vector<Action>& actions, const Inventory& inv,
                   const FrequencyLadder& ladder);

}  // namespace wattvm

#pragma once

/// @file controllers.hpp
/// The three cloud controllers behind one per-step interface: a best-fit
/// decreasing placement baseline (bfd), cost-aware placement/migration
/// (bcf), and the same followed by per-host frequency scaling (bcffs).

#include <map>
#include <string>
#include <vector>

#include "wattvm/model.hpp"
#include "wattvm/power.hpp"
#include "wattvm/pricing.hpp"

namespace wattvm {

/// Knobs shared by the controllers.
struct ControllerSettings {
    double underutil_threshold = 0.4;   // hosts below this get evacuated
    double evaluation_window_h = 1.0;   // horizon of the savings/loss comparison
    bool frequency_scaling = true;      // off turns bcffs into bcf
    // Literal pseudo-code semantics for the scaling stage's feasibility
    // flag: once any host accepts a decrease, pruning is disabled for the
    // rest of the pass. Default is the per-host reading.
    bool literal_feasible_flag = false;

    void validate() const;
};

/// Current per-location inputs, keyed by data-center id.
struct GeoSnapshot {
    std::map<std::string, double> price_usd_per_kwh;
    std::map<std::string, double> temp_c;
};

/// Model parameters every controller decision is priced against.
struct ModelParams {
    FrequencyLadder ladder;
    UtilWeights weights;
    PowerModel power;
    CoolingParams cooling;
    PricingParams pricing;
};

/// Everything a controller sees when invoked for one step.
struct ControllerContext {
    const Inventory* inventory = nullptr;
    const CloudState* state = nullptr;
    std::vector<std::string> pending;  // unallocated vm ids requested this step
    const GeoSnapshot* geo = nullptr;
    const ModelParams* params = nullptr;
    ControllerSettings settings;
    double step_h = 1.0;
};

/// Actions to apply plus the VMs that fit nowhere (deferred by the engine).
struct ControllerResult {
    std::vector<Action> actions;
    std::vector<std::string> unplaced;
};

enum class ControllerKind { Bfd, Bcf, Bcffs };

const char* controller_name(ControllerKind kind);
ControllerKind parse_controller(const std::string& name);

/// Effective cost of delivering one kWh to IT load at a location:
/// electricity price marked up by the cooling overhead.
double location_cost_rate(double price_usd_per_kwh, double temp_c, const CoolingParams& cooling);

/// Placement/migration stage: allocates pending VMs and evacuates
/// underutilised hosts, preferring large cheap-location hosts; suspends
/// hosts left empty. Emits resume/place/migrate/suspend actions.
ControllerResult bcf_migration_stage(const ControllerContext& ctx);

/// Frequency scaling stage, run on the post-migration state: walks each
/// active host down the ladder while the energy-cost saving of a step
/// strictly exceeds the revenue loss, and prunes hosts that dominate a
/// failed one (higher mean CPU-boundedness, cheaper, cooler).
std::vector<Action> frequency_scaling_stage(const ControllerContext& ctx,
                                            const CloudState& post_migration);

/// Best-fit decreasing placement baseline: no migrations, no scaling.
ControllerResult bfd_controller(const ControllerContext& ctx);

/// Migration stage only, hosts stay at the top frequency.
ControllerResult bcf_controller(const ControllerContext& ctx);

/// Migration stage followed by frequency scaling.
ControllerResult bcffs_controller(const ControllerContext& ctx);

ControllerResult run_controller(ControllerKind kind, const ControllerContext& ctx);

}  // namespace wattvm

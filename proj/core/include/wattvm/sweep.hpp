#pragma once

/// @file sweep.hpp
/// Parameter sweeps: one simulation per (axis value, controller), run on
/// a worker pool, with savings columns against the baseline controllers.

#include <string>
#include <vector>

#include "wattvm/engine.hpp"
#include "wattvm/reports.hpp"

namespace wattvm {

enum class SweepAxis { PmCount, VmCount, Utilisation, ElectricityMode, FixedBeta };

const char* axis_name(SweepAxis axis);
SweepAxis parse_axis(const std::string& name);

struct SweepSpec {
    SweepAxis axis = SweepAxis::VmCount;
    std::vector<std::string> values;
    std::vector<ControllerKind> controllers = {ControllerKind::Bfd, ControllerKind::Bcf,
                                               ControllerKind::Bcffs};

    void validate() const;
};

/// Base config with one axis value applied. pm_count scales the VM count
/// proportionally; utilisation sets the VM count as a ratio of the host
/// count; electricity_mode switches the price source; fixed_beta pins the
/// workload CPU-boundedness.
SimulationConfig apply_axis_value(const SimulationConfig& base, SweepAxis axis,
                                  const std::string& value);

/// Runs |values| x |controllers| simulations (up to `jobs` concurrently)
/// and returns the rows ordered by (value, controller).
std::vector<SweepRow> run_sweep(const SimulationConfig& base, const SweepSpec& spec, int jobs);

}  // namespace wattvm

#pragma once

/// @file pricing.hpp
/// Service revenue: per-VM hourly prices under performance-based or
/// perceived-performance pricing, and their per-host sum.

#include "wattvm/model.hpp"

namespace wattvm {

enum class PricingScheme { PerformanceBased, PerceivedPerformance };

/// Hourly price components. The CPU term is charged per core relative to
/// the reference frequency; the RAM term scales with the billed size.
struct PricingParams {
    double c_base_usd_h = 0.027;
    double c_cpu_usd_h = 0.018;
    double c_ram_usd_h = 0.025;
    double ram_base_gb = 1.0;
    PricingScheme scheme = PricingScheme::PerceivedPerformance;

    void validate() const;
};

/// Frequency the VM effectively experiences at host frequency `f_ghz`:
/// beta * f + (1 - beta) * f_max. CPU-bound VMs track the host frequency,
/// I/O-bound VMs stay pinned near the ladder maximum.
double perceived_frequency_ghz(double beta, double f_ghz, const FrequencyLadder& ladder);

/// Hourly price of one VM hosted at `pm_freq_ghz`. Under perceived-
/// performance pricing the billed frequency is the perceived one; all
/// cores of a VM share its beta.
double vm_price_usd_h(const VirtualMachine& vm, double pm_freq_ghz, const FrequencyLadder& ladder,
                      const PricingParams& p);

/// Hourly service revenue of a host: the sum of its VMs' prices.
double pm_revenue_usd_h(double pm_freq_ghz, const VmRefList& hosted,
                        const FrequencyLadder& ladder, const PricingParams& p);

const char* scheme_name(PricingScheme scheme);

}  // namespace wattvm

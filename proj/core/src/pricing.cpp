#include "wattvm/pricing.hpp"

#include <stdexcept>

namespace wattvm {

void PricingParams::validate() const {
    if (c_base_usd_h < 0 || c_cpu_usd_h < 0 || c_ram_usd_h < 0)
        throw std::invalid_argument("pricing: rates must be >= 0");
    if (ram_base_gb <= 0) throw std::invalid_argument("pricing: ram_base_gb must be > 0");
}

double perceived_frequency_ghz(double beta, double f_ghz, const FrequencyLadder& ladder) {
    return beta * f_ghz + (1.0 - beta) * ladder.max_ghz;
}

double vm_price_usd_h(const VirtualMachine& vm, double pm_freq_ghz, const FrequencyLadder& ladder,
                      const PricingParams& p) {
    const double f_cpu = p.scheme == PricingScheme::PerceivedPerformance
                             ? perceived_frequency_ghz(vm.beta, pm_freq_ghz, ladder)
                             : pm_freq_ghz;
    const double per_core = (f_cpu - ladder.base_ghz) / ladder.base_ghz;
    return p.c_base_usd_h + p.c_cpu_usd_h * vm.cores * per_core +
           p.c_ram_usd_h * (vm.ram_gb / p.ram_base_gb);
}

double pm_revenue_usd_h(double pm_freq_ghz, const VmRefList& hosted,
                        const FrequencyLadder& ladder, const PricingParams& p) {
    double sum = 0;
    for (const VirtualMachine* vm : hosted) sum += vm_price_usd_h(*vm, pm_freq_ghz, ladder, p);
    return sum;
}

const char* scheme_name(PricingScheme scheme) {
    return scheme == PricingScheme::PerceivedPerformance ? "perceived_performance"
                                                         : "performance_based";
}

}  // namespace wattvm

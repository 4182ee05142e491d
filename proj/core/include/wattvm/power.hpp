#pragma once

/// @file power.hpp
/// Host power models: the cubic single-core model, the multi-core
/// polynomial model with its CPU-boundedness core weighting, and the
/// temperature-driven cooling overhead.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "wattvm/model.hpp"

namespace wattvm {

/// Parameters of the cubic peak-power model. `p_base_w` is the peak draw
/// at the reference frequency, `p_dif_w` weighs the cubic frequency term.
struct CubicPowerParams {
    double p_base_w = 150.0;
    double p_idle_w = 100.0;
    double p_dif_w = 15.0;

    void validate() const;
};

/// Coefficients of the multi-core polynomial power model.
///
/// Peak power is a polynomial in the unitless frequency q and the active
/// core count c; `gamma_poly` (quadratic in beta, divided by
/// `p_max_core_w`) weighs how much of a core's peak dissipation a VM of a
/// given CPU-boundedness actually draws.
struct MulticorePowerParams {
    double p00 = 0, p10 = 0, p01 = 0, p20 = 0, p11 = 0, p30 = 0, p21 = 0;
    double p_max_core_w = 1.0;
    std::array<double, 3> gamma_poly = {0.0, 0.0, 1.0};  // beta^2, beta, constant
    int max_cores = 1;

    // Set by calibrate_multicore_params; zero for user-supplied coefficients.
    double calibration_rms_w = 0.0;
    double calibration_max_abs_w = 0.0;
    bool calibrated = false;

    /// Checks p_max_core_w > 0 and peak >= idle over the q grid for
    /// c in [0, max_cores]. Throws std::invalid_argument on violation.
    void validate(std::span<const double> q_levels) const;
};

/// Clamped linear cooling overhead in outside temperature. Total power is
/// IT power times (1 + factor).
struct CoolingParams {
    double reference_overhead = 0.2;
    double reference_temp_c = 15.0;
    double slope_per_c = 0.01;
    double min_overhead = 0.05;
    double max_overhead = 0.6;

    void validate() const;
};

/// Peak (fully utilised) power at frequency `f_ghz` under the cubic model.
/// Throws std::domain_error below the reference frequency, where the model
/// is undefined.
double peak_power_w(double f_ghz, const FrequencyLadder& ladder, const CubicPowerParams& p);

/// Host power at frequency `f_ghz` and utilisation `util` in [0,1]:
/// idle power plus the utilisation-weighted gap to peak. A suspended host
/// draws 0 W by convention; that case is handled by the caller.
double pm_power_w(double f_ghz, double util, const CubicPowerParams& p,
                  const FrequencyLadder& ladder);

/// Affine map of a ladder frequency onto the unitless q in [0, 1].
double unitless_frequency(double f_ghz, const FrequencyLadder& ladder);

/// Multi-core peak power at unitless frequency `q` with `active_cores`
/// fully utilised cores. Throws std::domain_error when active_cores
/// exceeds max_cores.
double multicore_peak_power_w(double q, double active_cores, const MulticorePowerParams& p);

/// Multi-core idle power: the peak polynomial at zero active cores.
double multicore_idle_power_w(double q, const MulticorePowerParams& p);

/// Power ratio of a core running a VM with the given CPU-boundedness,
/// clamped to [0, 1].
double gamma_core(double beta, const MulticorePowerParams& p);

/// Multi-core host power with one beta entry per busy core: idle power
/// plus the gamma-averaged share of the peak-idle gap. Returns idle power
/// when no core is busy.
double multicore_pm_power_w(double q, std::span<const double> per_core_betas,
                            const MulticorePowerParams& p);

/// Cooling power as a fraction of IT power at the given outside
/// temperature, clamped to [min_overhead, max_overhead].
double cooling_overhead_factor(double temp_c, const CoolingParams& cp);

/// Fit multi-core coefficients against the cubic model over the ladder
/// x core grid, interpolating exactly at two anchors: full load at the top
/// frequency and idle at the top frequency. The least-squares residual of
/// the remaining grid is recorded in the returned params.
MulticorePowerParams calibrate_multicore_params(const CubicPowerParams& cubic,
                                                const FrequencyLadder& ladder, int max_cores);

enum class PowerModelKind { Cubic, Multicore };

/// The power model a simulation runs with.
struct PowerModel {
    PowerModelKind kind = PowerModelKind::Cubic;
    CubicPowerParams cubic;
    std::optional<MulticorePowerParams> multicore;
};

/// IT power of an active host under the configured model. The cubic model
/// uses the weighted utilisation; the multi-core model uses the per-core
/// beta list.
double pm_it_power_w(const PowerModel& model, const FrequencyLadder& ladder, double f_ghz,
                     double util, std::span<const double> per_core_betas);

}  // namespace wattvm

#pragma once

/// @file traces.hpp
/// Time-varying inputs: electricity price and temperature series
/// (loaded from CSV or synthesized), CPU-boundedness sampling, and
/// workload generation.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wattvm/model.hpp"
#include "wattvm/rng.hpp"

namespace wattvm {

enum class TraceKind { ElectricityPrice, Temperature };

/// Per-location, per-step samples of one geotemporal input.
/// Sample steps are strictly increasing; electricity prices are positive.
struct TimeSeries {
    std::string location;
    TraceKind kind = TraceKind::ElectricityPrice;
    std::vector<std::pair<int, double>> samples;  // (step, value), sorted

    /// Value at `step`; throws std::out_of_range on a gap, naming the
    /// step and location.
    double value_at(int step) const;

    bool covers(int first_step, int last_step) const;
    double mean() const;

    /// Throws std::invalid_argument on unsorted/duplicate steps or, for
    /// price series, non-positive values.
    void validate() const;
};

/// Parses a trace CSV (`step,location,value`, sorted by location then
/// step) into one series per location, in file order. Malformed rows
/// raise std::runtime_error naming the line.
std::vector<TimeSeries> load_timeseries_csv(const std::string& path, TraceKind kind);

void write_timeseries_csv(const std::string& path, const std::vector<TimeSeries>& series);

/// Constant price series at the data center's mean price.
TimeSeries fixed_prices(const DataCenter& dc, int steps);

/// Derives a location's price series from a base series: shifts it by the
/// timezone offset, moves the mean onto the data center's mean price, and
/// floors at a small positive epsilon. The base must cover the shifted
/// window.
TimeSeries synthesize_prices(const TimeSeries& base, const DataCenter& dc, int steps,
                             double step_h);

/// Diurnal sinusoid base price series with optional relative noise,
/// covering [first_step, last_step].
TimeSeries diurnal_price_base(int first_step, int last_step, double mean_usd_per_kwh,
                              double rel_amplitude, int peak_hour, double rel_noise,
                              std::uint64_t seed, double step_h);

/// Diurnal temperature series for one location (peak at `peak_hour`
/// local time).
TimeSeries diurnal_temperatures(const DataCenter& dc, double mean_temp_c, int steps,
                                double amplitude_c, int peak_hour, double noise_c,
                                std::uint64_t seed, double step_h);

/// Where VM CPU-boundedness values come from.
struct BetaSource {
    enum class Kind { Fixed, ExponentialFit, FromFile };
    Kind kind = Kind::ExponentialFit;
    double fixed = 0.2;
    double rate = 1.0 / 0.18;
    std::vector<double> file_values;
    std::size_t next = 0;  // cursor into file_values

    void validate() const;
};

/// Draws one CPU-boundedness value in [0,1]. Exponential draws are
/// resampled until they fall inside the unit interval; file-backed
/// sources are consumed in order.
double sample_beta(BetaSource& source, Rng& rng);

/// Shape of a generated workload.
struct WorkloadSpec {
    int vm_count = 200;
    int cores_min = 1;
    int cores_max = 1;
    double ram_min_gb = 8.0;
    double ram_max_gb = 32.0;
    int sim_steps = 168;
    BetaSource beta;

    void validate() const;
};

/// Generates `vm_count` VMs: boot steps uniform over the horizon, delete
/// steps uniform over the remainder, core and RAM demands uniform over
/// their ranges. Deterministic in the rng states.
std::vector<VirtualMachine> generate_workload(const WorkloadSpec& spec, Rng& rng, Rng& beta_rng);

/// Reads a workload CSV: `vm_id,cores,ram_gb,beta,boot_step,delete_step`.
std::vector<VirtualMachine> load_workload_csv(const std::string& path);

/// Reads a CPU usage CSV (`vm_id,usage` with one row per sample) and maps
/// each VM to its mean usage fraction, in first-appearance order.
std::vector<double> betas_from_usage_csv(const std::string& path);

}  // namespace wattvm

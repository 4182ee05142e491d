#pragma once

/// @file reports.hpp
/// CSV emission for runs and sweeps. Every file starts with the
/// effective config as '# '-prefixed header lines, so results are
/// reproducible from any single output file.

#include <iosfwd>
#include <string>
#include <vector>

#include "wattvm/engine.hpp"

namespace wattvm {

/// Stable formatting for all numeric CSV fields ("%.10g").
std::string fmt_value(double v);

/// Writes report_<c>.csv, per_step_<c>.csv, actions_<c>.csv and
/// hist_beta_freq_<c>.csv into `dir` (created if missing). Files are
/// written atomically (temp file + rename).
void write_report_files(const std::string& dir, const SimulationConfig& config,
                        const SimulationReport& report);

/// Aggregate-results table for the selected controllers, normalised
/// against the bfd run when present.
void print_summary(std::ostream& os, const std::vector<SimulationReport>& reports);

struct SweepRow {
    std::string axis_value;
    std::string controller;
    double total_cost_usd = 0;
    double total_energy_kwh = 0;
    double revenue_usd = 0;
    bool has_savings_vs_bfd = false;
    double savings_vs_bfd = 0;  // fraction of the bfd cost saved
    bool has_savings_vs_bcf = false;
    double savings_vs_bcf = 0;
};

void write_sweep_csv(const std::string& dir, const std::string& axis_name,
                     const SimulationConfig& config, const std::vector<SweepRow>& rows);

}  // namespace wattvm

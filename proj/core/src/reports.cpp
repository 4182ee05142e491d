#include "wattvm/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "wattvm/config.hpp"

namespace wattvm {

namespace fs = std::filesystem;

std::string fmt_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

namespace {

void write_header(std::ostream& os, const std::string& config_echo) {
    std::istringstream in(config_echo);
    std::string line;
    while (std::getline(in, line)) os << (line.empty() ? "#" : "# ") << line << "\n";
}

// Atomic write: the file appears complete or not at all.
void write_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

}  // namespace

void write_report_files(const std::string& dir, const SimulationConfig& config,
                        const SimulationReport& report) {
    fs::create_directories(dir);
    const std::string& name = report.controller;

    {
        std::ostringstream os;
        write_header(os, report.config_echo);
        os << "metric,value\n";
        os << "it_energy_kwh," << fmt_value(report.it_energy_kwh) << "\n";
        os << "cooling_energy_kwh," << fmt_value(report.cooling_energy_kwh) << "\n";
        os << "total_energy_kwh," << fmt_value(report.total_energy_kwh) << "\n";
        os << "it_cost_usd," << fmt_value(report.it_cost_usd) << "\n";
        os << "total_cost_usd," << fmt_value(report.total_cost_usd) << "\n";
        os << "service_revenue_usd," << fmt_value(report.revenue_usd) << "\n";
        os << "migrations," << report.migrations << "\n";
        os << "unplaced_events," << report.unplaced_events << "\n";
        os << "allocated_vm_steps," << report.allocated_vm_steps << "\n";
        if (report.multicore_calibrated)
            os << "multicore_calibration_rms_w," << fmt_value(report.multicore_calibration_rms_w)
               << "\n";
        write_file(fs::path(dir) / ("report_" + name + ".csv"), os.str());
    }
    {
        std::ostringstream os;
        write_header(os, report.config_echo);
        os << "step,it_energy_kwh,cooling_energy_kwh,total_energy_kwh,it_cost_usd,"
              "total_cost_usd,revenue_usd,active_pms,live_vms,allocated_vms,migrations,"
              "unplaced\n";
        for (const auto& st : report.per_step) {
            os << st.step << "," << fmt_value(st.it_energy_kwh) << ","
               << fmt_value(st.cooling_energy_kwh) << "," << fmt_value(st.total_energy_kwh) << ","
               << fmt_value(st.it_cost_usd) << "," << fmt_value(st.total_cost_usd) << ","
               << fmt_value(st.revenue_usd) << "," << st.active_pms << "," << st.live_vms << ","
               << st.allocated_vms << "," << st.migrations << "," << st.unplaced << "\n";
        }
        write_file(fs::path(dir) / ("per_step_" + name + ".csv"), os.str());
    }
    {
        std::ostringstream os;
        write_header(os, report.config_echo);
        os << "step,kind,subject,target\n";
        for (const auto& a : report.actions)
            os << a.step << "," << a.kind << "," << a.subject << "," << a.target << "\n";
        write_file(fs::path(dir) / ("actions_" + name + ".csv"), os.str());
    }
    {
        std::ostringstream os;
        write_header(os, report.config_echo);
        os << "beta_bin_low,beta_bin_high,freq_ghz,count\n";
        const auto levels = config.params.ladder.levels();
        const int bins = static_cast<int>(report.beta_freq_histogram.size());
        for (int b = 0; b < bins; ++b) {
            const double low = static_cast<double>(b) / bins;
            const double high = static_cast<double>(b + 1) / bins;
            for (size_t f = 0; f < levels.size(); ++f) {
                os << fmt_value(low) << "," << fmt_value(high) << "," << fmt_value(levels[f])
                   << "," << report.beta_freq_histogram[b][f] << "\n";
            }
        }
        write_file(fs::path(dir) / ("hist_beta_freq_" + name + ".csv"), os.str());
    }
}

void print_summary(std::ostream& os, const std::vector<SimulationReport>& reports) {
    const SimulationReport* bfd = nullptr;
    for (const auto& r : reports)
        if (r.controller == "bfd") bfd = &r;

    auto row = [&](const char* label, auto metric) {
        os << std::left << std::setw(22) << label;
        for (const auto& r : reports) {
            std::ostringstream cell;
            cell << fmt_value(metric(r));
            if (bfd != nullptr && &r != bfd && metric(*bfd) != 0) {
                char rel[32];
                std::snprintf(rel, sizeof(rel), " (%.1f%%)",
                              100.0 * metric(r) / metric(*bfd));
                cell << rel;
            }
            os << std::right << std::setw(22) << cell.str();
        }
        os << "\n";
    };

    os << std::left << std::setw(22) << "metric";
    for (const auto& r : reports) os << std::right << std::setw(22) << r.controller;
    os << "\n";
    row("IT energy (kWh)", [](const SimulationReport& r) { return r.it_energy_kwh; });
    row("IT cost ($)", [](const SimulationReport& r) { return r.it_cost_usd; });
    row("Total energy (kWh)", [](const SimulationReport& r) { return r.total_energy_kwh; });
    row("Total cost ($)", [](const SimulationReport& r) { return r.total_cost_usd; });
    row("Service revenue ($)", [](const SimulationReport& r) { return r.revenue_usd; });
    if (bfd != nullptr) os << "(percentages are relative to the bfd baseline)\n";
}

void write_sweep_csv(const std::string& dir, const std::string& axis_name,
                     const SimulationConfig& config, const std::vector<SweepRow>& rows) {
    fs::create_directories(dir);
    std::ostringstream os;
    write_header(os, serialize_config(config));
    os << "# sweep_axis = " << axis_name << "\n";
    os << "axis_value,controller,total_cost_usd,total_energy_kwh,revenue_usd,"
          "savings_vs_bfd,savings_vs_bcf\n";
    for (const auto& r : rows) {
        os << r.axis_value << "," << r.controller << "," << fmt_value(r.total_cost_usd) << ","
           << fmt_value(r.total_energy_kwh) << "," << fmt_value(r.revenue_usd) << ","
           << (r.has_savings_vs_bfd ? fmt_value(r.savings_vs_bfd) : "") << ","
           << (r.has_savings_vs_bcf ? fmt_value(r.savings_vs_bcf) : "") << "\n";
    }
    write_file(fs::path(dir) / ("sweep_" + axis_name + ".csv"), os.str());
}

}  // namespace wattvm

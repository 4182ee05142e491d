#include "wattvm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wattvm {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct ParsedConfig {
    std::string source;
    std::map<std::string, std::vector<ConfigEntry>> sections;

    [[noreturn]] void fail(int line, const std::string& what) const {
        std::ostringstream os;
        os << source << ":" << line << ": " << what;
        throw std::runtime_error(os.str());
    }

    const ConfigEntry* find(const std::string& section, const std::string& key) const {
        auto sec = sections.find(section);
        if (sec == sections.end()) return nullptr;
        const ConfigEntry* found = nullptr;
        for (const auto& entry : sec->second) {
            if (entry.key == key) {
                entry.used = true;
                found = &entry;  // last occurrence wins
            }
        }
        return found;
    }

    std::vector<const ConfigEntry*> find_all(const std::string& section,
                                             const std::string& key) const {
        std::vector<const ConfigEntry*> out;
        auto sec = sections.find(section);
        if (sec == sections.end()) return out;
        for (const auto& entry : sec->second) {
            if (entry.key == key) {
                entry.used = true;
                out.push_back(&entry);
            }
        }
        return out;
    }

    void check_all_used() const {
        for (const auto& [section, entries] : sections)
            for (const auto& entry : entries)
                if (!entry.used)
                    fail(entry.line, "unknown key '" + entry.key + "' in section [" + section + "]");
    }
};

ParsedConfig parse_ini(const std::string& text, const std::string& source) {
    ParsedConfig out;
    out.source = source;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') out.fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) out.fail(line_no, "empty section name");
            out.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) out.fail(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) out.fail(line_no, "empty key");
        if (section.empty()) out.fail(line_no, "key '" + key + "' outside any section");
        out.sections[section].push_back({key, value, line_no, false});
    }
    return out;
}

double to_double(const ParsedConfig& cfg, const ConfigEntry& e) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc{} || ptr != e.value.data() + e.value.size())
        cfg.fail(e.line, "key '" + e.key + "': bad number '" + e.value + "'");
    return v;
}

long to_long(const ParsedConfig& cfg, const ConfigEntry& e) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc{} || ptr != e.value.data() + e.value.size())
        cfg.fail(e.line, "key '" + e.key + "': bad integer '" + e.value + "'");
    return v;
}

bool to_bool(const ParsedConfig& cfg, const ConfigEntry& e) {
    if (e.value == "true" || e.value == "on" || e.value == "1") return true;
    if (e.value == "false" || e.value == "off" || e.value == "0") return false;
    cfg.fail(e.line, "key '" + e.key + "': expected true/false, got '" + e.value + "'");
}

void get(const ParsedConfig& cfg, const std::string& sec, const std::string& key, double& out) {
    if (const auto* e = cfg.find(sec, key)) out = to_double(cfg, *e);
}
void get(const ParsedConfig& cfg, const std::string& sec, const std::string& key, int& out) {
    if (const auto* e = cfg.find(sec, key)) out = static_cast<int>(to_long(cfg, *e));
}
void get(const ParsedConfig& cfg, const std::string& sec, const std::string& key,
         std::uint64_t& out) {
    if (const auto* e = cfg.find(sec, key)) out = static_cast<std::uint64_t>(to_long(cfg, *e));
}
void get(const ParsedConfig& cfg, const std::string& sec, const std::string& key, bool& out) {
    if (const auto* e = cfg.find(sec, key)) out = to_bool(cfg, *e);
}
void get(const ParsedConfig& cfg, const std::string& sec, const std::string& key,
         std::string& out) {
    if (const auto* e = cfg.find(sec, key)) out = e->value;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

SimulationConfig default_config() {
    SimulationConfig c;
    c.datacenters = {
        {"us-ia", "council_bluffs", -6, 0.030},
        {"us-or", "the_dalles", -8, 0.025},
        {"eu-ie", "dublin", 0, 0.034},
        {"eu-fi", "hamina", 2, 0.019},
        {"eu-be", "st_ghislain", 1, 0.037},
        {"ap-sg", "singapore", 8, 0.014},
    };
    c.traces.dc_mean_temp_c = {11, 12, 9, 6, 10, 27};
    return c;
}

SimulationConfig parse_config_text(const std::string& text, const std::string& source_name) {
    const ParsedConfig ini = parse_ini(text, source_name);
    SimulationConfig c = default_config();

    // [model]
    get(ini, "model", "f_base_ghz", c.params.ladder.base_ghz);
    get(ini, "model", "f_min_ghz", c.params.ladder.min_ghz);
    get(ini, "model", "f_max_ghz", c.params.ladder.max_ghz);
    get(ini, "model", "f_step_ghz", c.params.ladder.step_ghz);
    get(ini, "model", "util_weight_cores", c.params.weights.cores);
    get(ini, "model", "util_weight_ram", c.params.weights.ram);

    // [power]
    if (const auto* e = ini.find("power", "model")) {
        if (e->value == "cubic")
            c.params.power.kind = PowerModelKind::Cubic;
        else if (e->value == "multicore")
            c.params.power.kind = PowerModelKind::Multicore;
        else
            ini.fail(e->line, "power model must be 'cubic' or 'multicore'");
    }
    get(ini, "power", "p_base_w", c.params.power.cubic.p_base_w);
    get(ini, "power", "p_idle_w", c.params.power.cubic.p_idle_w);
    get(ini, "power", "p_dif_w", c.params.power.cubic.p_dif_w);
    {
        // Multicore coefficients are all-or-nothing; omitted means the model
        // is calibrated from the cubic anchors at run time.
        static const char* kCoeffKeys[] = {
            "multicore_p00", "multicore_p10", "multicore_p01",       "multicore_p20",
            "multicore_p11", "multicore_p30", "multicore_p21",       "multicore_max_cores",
            "gamma_beta2",   "gamma_beta1",   "gamma_const",         "multicore_p_max_core_w"};
        bool any = false, all = true;
        for (const char* key : kCoeffKeys) {
            bool present = false;
            if (auto sec = ini.sections.find("power"); sec != ini.sections.end())
                for (const auto& e : sec->second)
                    if (e.key == key) present = true;
            any = any || present;
            all = all && present;
        }
        if (any && !all)
            throw std::runtime_error(source_name +
                                     ": multicore coefficients must be given completely or "
                                     "not at all");
        if (all) {
            MulticorePowerParams mp;
            get(ini, "power", "multicore_p00", mp.p00);
            get(ini, "power", "multicore_p10", mp.p10);
            get(ini, "power", "multicore_p01", mp.p01);
            get(ini, "power", "multicore_p20", mp.p20);
            get(ini, "power", "multicore_p11", mp.p11);
            get(ini, "power", "multicore_p30", mp.p30);
            get(ini, "power", "multicore_p21", mp.p21);
            get(ini, "power", "multicore_max_cores", mp.max_cores);
            get(ini, "power", "multicore_p_max_core_w", mp.p_max_core_w);
            get(ini, "power", "gamma_beta2", mp.gamma_poly[0]);
            get(ini, "power", "gamma_beta1", mp.gamma_poly[1]);
            get(ini, "power", "gamma_const", mp.gamma_poly[2]);
            c.params.power.multicore = mp;
        }
    }
    get(ini, "power", "cooling_reference_overhead", c.params.cooling.reference_overhead);
    get(ini, "power", "cooling_reference_temp_c", c.params.cooling.reference_temp_c);
    get(ini, "power", "cooling_slope_per_c", c.params.cooling.slope_per_c);
    get(ini, "power", "cooling_min_overhead", c.params.cooling.min_overhead);
    get(ini, "power", "cooling_max_overhead", c.params.cooling.max_overhead);

    // [pricing]
    if (const auto* e = ini.find("pricing", "scheme")) {
        if (e->value == "perceived_performance")
            c.params.pricing.scheme = PricingScheme::PerceivedPerformance;
        else if (e->value == "performance_based")
            c.params.pricing.scheme = PricingScheme::PerformanceBased;
        else
            ini.fail(e->line, "scheme must be 'perceived_performance' or 'performance_based'");
    }
    get(ini, "pricing", "c_base_usd_h", c.params.pricing.c_base_usd_h);
    get(ini, "pricing", "c_cpu_usd_h", c.params.pricing.c_cpu_usd_h);
    get(ini, "pricing", "c_ram_usd_h", c.params.pricing.c_ram_usd_h);
    get(ini, "pricing", "ram_base_gb", c.params.pricing.ram_base_gb);

    // [traces]
    if (const auto* e = ini.find("traces", "electricity_mode")) {
        if (e->value == "variable")
            c.traces.electricity_mode = TraceConfig::ElectricityMode::Variable;
        else if (e->value == "fixed")
            c.traces.electricity_mode = TraceConfig::ElectricityMode::Fixed;
        else if (e->value == "files")
            c.traces.electricity_mode = TraceConfig::ElectricityMode::Files;
        else
            ini.fail(e->line, "electricity_mode must be variable, fixed or files");
    }
    get(ini, "traces", "price_file", c.traces.price_file);
    get(ini, "traces", "temperature_file", c.traces.temperature_file);
    get(ini, "traces", "price_diurnal_amplitude", c.traces.price_rel_amplitude);
    get(ini, "traces", "price_noise", c.traces.price_rel_noise);
    get(ini, "traces", "price_peak_hour", c.traces.price_peak_hour);
    get(ini, "traces", "temp_diurnal_amplitude_c", c.traces.temp_amplitude_c);
    get(ini, "traces", "temp_peak_hour", c.traces.temp_peak_hour);
    get(ini, "traces", "temp_noise_c", c.traces.temp_noise_c);
    {
        const auto entries = ini.find_all("traces", "datacenter");
        if (!entries.empty()) {
            c.datacenters.clear();
            c.traces.dc_mean_temp_c.clear();
            for (const auto* e : entries) {
                const auto fields = split_list(e->value);
                if (fields.size() != 5)
                    ini.fail(e->line,
                             "datacenter needs 'id, name, timezone_offset_h, "
                             "mean_price_usd_per_kwh, mean_temp_c'");
                DataCenter dc;
                dc.id = fields[0];
                dc.name = fields[1];
                ConfigEntry tmp{e->key, fields[2], e->line, true};
                dc.timezone_offset_h = to_double(ini, tmp);
                tmp.value = fields[3];
                dc.mean_price_usd_per_kwh = to_double(ini, tmp);
                tmp.value = fields[4];
                c.traces.dc_mean_temp_c.push_back(to_double(ini, tmp));
                c.datacenters.push_back(std::move(dc));
            }
        }
    }
    get(ini, "traces", "vm_count", c.workload.vm_count);
    get(ini, "traces", "vm_cores_min", c.workload.cores_min);
    get(ini, "traces", "vm_cores_max", c.workload.cores_max);
    get(ini, "traces", "vm_ram_min_gb", c.workload.ram_min_gb);
    get(ini, "traces", "vm_ram_max_gb", c.workload.ram_max_gb);
    if (const auto* e = ini.find("traces", "beta_source")) {
        if (e->value == "exponential")
            c.workload.beta.kind = BetaSource::Kind::ExponentialFit;
        else if (e->value == "fixed")
            c.workload.beta.kind = BetaSource::Kind::Fixed;
        else if (e->value == "file")
            c.workload.beta.kind = BetaSource::Kind::FromFile;
        else
            ini.fail(e->line, "beta_source must be exponential, fixed or file");
    }
    get(ini, "traces", "beta_rate", c.workload.beta.rate);
    get(ini, "traces", "beta_fixed", c.workload.beta.fixed);
    get(ini, "traces", "beta_usage_file", c.beta_usage_file);
    get(ini, "traces", "workload_file", c.workload_file);
    if (c.workload.beta.kind == BetaSource::Kind::FromFile && c.beta_usage_file.empty() &&
        c.workload_file.empty())
        throw std::runtime_error(source_name + ": beta_source=file requires beta_usage_file");

    // [controllers]
    if (const auto* e = ini.find("controllers", "controller")) {
        c.controllers.clear();
        if (e->value == "all") {
            c.controllers = {ControllerKind::Bfd, ControllerKind::Bcf, ControllerKind::Bcffs};
        } else {
            for (const auto& name : split_list(e->value)) {
                try {
                    c.controllers.push_back(parse_controller(name));
                } catch (const std::exception& ex) {
                    ini.fail(e->line, ex.what());
                }
            }
        }
        if (c.controllers.empty()) ini.fail(e->line, "no controller selected");
    }
    get(ini, "controllers", "underutil_threshold", c.controller.underutil_threshold);
    get(ini, "controllers", "evaluation_window_h", c.controller.evaluation_window_h);
    get(ini, "controllers", "frequency_scaling", c.controller.frequency_scaling);
    get(ini, "controllers", "literal_feasible_flag", c.controller.literal_feasible_flag);

    // [engine]
    get(ini, "engine", "steps", c.steps);
    get(ini, "engine", "step_hours", c.step_h);
    get(ini, "engine", "seed", c.seed);
    get(ini, "engine", "pm_count", c.inventory.count);
    get(ini, "engine", "pm_cores_min", c.inventory.cores_min);
    get(ini, "engine", "pm_cores_max", c.inventory.cores_max);
    get(ini, "engine", "pm_ram_min_gb", c.inventory.ram_min_gb);
    get(ini, "engine", "pm_ram_max_gb", c.inventory.ram_max_gb);
    get(ini, "engine", "migration_energy_wh_per_gb", c.migration_energy_wh_per_gb);
    get(ini, "engine", "hist_beta_bins", c.hist_beta_bins);

    // [cli]
    get(ini, "cli", "out_dir", c.out_dir);
    get(ini, "cli", "jobs", c.jobs);

    ini.check_all_used();
    c.workload.sim_steps = c.steps;
    c.validate();
    return c;
}

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str(), path);
}

std::string serialize_config(const SimulationConfig& c, std::optional<ControllerKind> running) {
    std::ostringstream os;
    os << "[model]\n";
    os << "f_base_ghz = " << fmt17(c.params.ladder.base_ghz) << "\n";
    os << "f_min_ghz = " << fmt17(c.params.ladder.min_ghz) << "\n";
    os << "f_max_ghz = " << fmt17(c.params.ladder.max_ghz) << "\n";
    os << "f_step_ghz = " << fmt17(c.params.ladder.step_ghz) << "\n";
    os << "util_weight_cores = " << fmt17(c.params.weights.cores) << "\n";
    os << "util_weight_ram = " << fmt17(c.params.weights.ram) << "\n";

    os << "[power]\n";
    os << "model = " << (c.params.power.kind == PowerModelKind::Cubic ? "cubic" : "multicore")
       << "\n";
    os << "p_base_w = " << fmt17(c.params.power.cubic.p_base_w) << "\n";
    os << "p_idle_w = " << fmt17(c.params.power.cubic.p_idle_w) << "\n";
    os << "p_dif_w = " << fmt17(c.params.power.cubic.p_dif_w) << "\n";
    if (c.params.power.multicore) {
        const auto& mp = *c.params.power.multicore;
        os << "multicore_p00 = " << fmt17(mp.p00) << "\n";
        os << "multicore_p10 = " << fmt17(mp.p10) << "\n";
        os << "multicore_p01 = " << fmt17(mp.p01) << "\n";
        os << "multicore_p20 = " << fmt17(mp.p20) << "\n";
        os << "multicore_p11 = " << fmt17(mp.p11) << "\n";
        os << "multicore_p30 = " << fmt17(mp.p30) << "\n";
        os << "multicore_p21 = " << fmt17(mp.p21) << "\n";
        os << "multicore_max_cores = " << mp.max_cores << "\n";
        os << "multicore_p_max_core_w = " << fmt17(mp.p_max_core_w) << "\n";
        os << "gamma_beta2 = " << fmt17(mp.gamma_poly[0]) << "\n";
        os << "gamma_beta1 = " << fmt17(mp.gamma_poly[1]) << "\n";
        os << "gamma_const = " << fmt17(mp.gamma_poly[2]) << "\n";
    }
    os << "cooling_reference_overhead = " << fmt17(c.params.cooling.reference_overhead) << "\n";
    os << "cooling_reference_temp_c = " << fmt17(c.params.cooling.reference_temp_c) << "\n";
    os << "cooling_slope_per_c = " << fmt17(c.params.cooling.slope_per_c) << "\n";
    os << "cooling_min_overhead = " << fmt17(c.params.cooling.min_overhead) << "\n";
    os << "cooling_max_overhead = " << fmt17(c.params.cooling.max_overhead) << "\n";

    os << "[pricing]\n";
    os << "scheme = " << scheme_name(c.params.pricing.scheme) << "\n";
    os << "c_base_usd_h = " << fmt17(c.params.pricing.c_base_usd_h) << "\n";
    os << "c_cpu_usd_h = " << fmt17(c.params.pricing.c_cpu_usd_h) << "\n";
    os << "c_ram_usd_h = " << fmt17(c.params.pricing.c_ram_usd_h) << "\n";
    os << "ram_base_gb = " << fmt17(c.params.pricing.ram_base_gb) << "\n";

    os << "[traces]\n";
    const char* mode = "variable";
    if (c.traces.electricity_mode == TraceConfig::ElectricityMode::Fixed) mode = "fixed";
    if (c.traces.electricity_mode == TraceConfig::ElectricityMode::Files) mode = "files";
    os << "electricity_mode = " << mode << "\n";
    if (!c.traces.price_file.empty()) os << "price_file = " << c.traces.price_file << "\n";
    if (!c.traces.temperature_file.empty())
        os << "temperature_file = " << c.traces.temperature_file << "\n";
    os << "price_diurnal_amplitude = " << fmt17(c.traces.price_rel_amplitude) << "\n";
    os << "price_noise = " << fmt17(c.traces.price_rel_noise) << "\n";
    os << "price_peak_hour = " << c.traces.price_peak_hour << "\n";
    os << "temp_diurnal_amplitude_c = " << fmt17(c.traces.temp_amplitude_c) << "\n";
    os << "temp_peak_hour = " << c.traces.temp_peak_hour << "\n";
    os << "temp_noise_c = " << fmt17(c.traces.temp_noise_c) << "\n";
    for (size_t i = 0; i < c.datacenters.size(); ++i) {
        const auto& dc = c.datacenters[i];
        const double mean_temp =
            c.traces.dc_mean_temp_c.empty() ? 12.0 : c.traces.dc_mean_temp_c[i];
        os << "datacenter = " << dc.id << ", " << dc.name << ", " << fmt17(dc.timezone_offset_h)
           << ", " << fmt17(dc.mean_price_usd_per_kwh) << ", " << fmt17(mean_temp) << "\n";
    }
    os << "vm_count = " << c.workload.vm_count << "\n";
    os << "vm_cores_min = " << c.workload.cores_min << "\n";
    os << "vm_cores_max = " << c.workload.cores_max << "\n";
    os << "vm_ram_min_gb = " << fmt17(c.workload.ram_min_gb) << "\n";
    os << "vm_ram_max_gb = " << fmt17(c.workload.ram_max_gb) << "\n";
    const char* beta_kind = "exponential";
    if (c.workload.beta.kind == BetaSource::Kind::Fixed) beta_kind = "fixed";
    if (c.workload.beta.kind == BetaSource::Kind::FromFile) beta_kind = "file";
    os << "beta_source = " << beta_kind << "\n";
    os << "beta_rate = " << fmt17(c.workload.beta.rate) << "\n";
    os << "beta_fixed = " << fmt17(c.workload.beta.fixed) << "\n";
    if (!c.beta_usage_file.empty()) os << "beta_usage_file = " << c.beta_usage_file << "\n";
    if (!c.workload_file.empty()) os << "workload_file = " << c.workload_file << "\n";

    os << "[controllers]\n";
    os << "controller = ";
    if (running) {
        os << controller_name(*running);
    } else {
        for (size_t i = 0; i < c.controllers.size(); ++i)
            os << (i ? "," : "") << controller_name(c.controllers[i]);
    }
    os << "\n";
    os << "underutil_threshold = " << fmt17(c.controller.underutil_threshold) << "\n";
    os << "evaluation_window_h = " << fmt17(c.controller.evaluation_window_h) << "\n";
    os << "frequency_scaling = " << (c.controller.frequency_scaling ? "true" : "false") << "\n";
    os << "literal_feasible_flag = " << (c.controller.literal_feasible_flag ? "true" : "false")
       << "\n";

    os << "[engine]\n";
    os << "steps = " << c.steps << "\n";
    os << "step_hours = " << fmt17(c.step_h) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "pm_count = " << c.inventory.count << "\n";
    os << "pm_cores_min = " << c.inventory.cores_min << "\n";
    os << "pm_cores_max = " << c.inventory.cores_max << "\n";
    os << "pm_ram_min_gb = " << fmt17(c.inventory.ram_min_gb) << "\n";
    os << "pm_ram_max_gb = " << fmt17(c.inventory.ram_max_gb) << "\n";
    os << "migration_energy_wh_per_gb = " << fmt17(c.migration_energy_wh_per_gb) << "\n";
    os << "hist_beta_bins = " << c.hist_beta_bins << "\n";

    os << "[cli]\n";
    os << "out_dir = " << c.out_dir << "\n";
    os << "jobs = " << c.jobs << "\n";
    return os.str();
}

SimulationConfig extract_config_from_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream text;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0)
            text << line.substr(2) << "\n";
        else if (line == "#")
            text << "\n";
        else
            break;
    }
    return parse_config_text(text.str(), path + " (header)");
}

}  // namespace wattvm

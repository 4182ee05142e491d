#include "wattvm/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace wattvm {

namespace {

constexpr double kPriceFloorUsdPerKwh = 1e-4;

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
    std::ostringstream os;
    os << path << ":" << line_no << ": " << what;
    throw std::runtime_error(os.str());
}

double parse_double(const std::string& field, const std::string& path, int line_no) {
    double value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) parse_fail(path, line_no, "bad number '" + field + "'");
    return value;
}

long parse_long(const std::string& field, const std::string& path, int line_no) {
    long value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) parse_fail(path, line_no, "bad integer '" + field + "'");
    return value;
}

std::ifstream open_or_fail(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

double diurnal_wave(double hour_of_day, int peak_hour) {
    // Unit sinusoid peaking at peak_hour.
    return std::sin(2.0 * std::numbers::pi * (hour_of_day - peak_hour + 6.0) / 24.0);
}

}  // namespace

double TimeSeries::value_at(int step) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), step,
                               [](const auto& sample, int s) { return sample.first < s; });
    if (it == samples.end() || it->first != step) {
        std::ostringstream os;
        os << "trace gap: no sample for step " << step << " at location '" << location << "'";
        throw std::out_of_range(os.str());
    }
    return it->second;
}

bool TimeSeries::covers(int first_step, int last_step) const {
    if (samples.empty()) return false;
    if (samples.front().first > first_step || samples.back().first < last_step) return false;
    // Strictly increasing steps, so full coverage means no index gaps.
    auto it = std::lower_bound(samples.begin(), samples.end(), first_step,
                               [](const auto& sample, int s) { return sample.first < s; });
    for (int step = first_step; step <= last_step; ++step, ++it) {
        if (it == samples.end() || it->first != step) return false;
    }
    return true;
}

double TimeSeries::mean() const {
    if (samples.empty()) return 0.0;
    double sum = 0;
    for (const auto& [step, value] : samples) sum += value;
    return sum / static_cast<double>(samples.size());
}

void TimeSeries::validate() const {
    for (size_t i = 0; i < samples.size(); ++i) {
        if (i > 0 && samples[i].first <= samples[i - 1].first) {
            std::ostringstream os;
            os << "trace '" << location << "': step " << samples[i].first
               << " repeats or decreases";
            throw std::invalid_argument(os.str());
        }
        if (kind == TraceKind::ElectricityPrice && samples[i].second <= 0) {
            std::ostringstream os;
            os << "trace '" << location << "': non-positive price at step " << samples[i].first;
            throw std::invalid_argument(os.str());
        }
    }
}

std::vector<TimeSeries> load_timeseries_csv(const std::string& path, TraceKind kind) {
    std::ifstream in = open_or_fail(path);
    std::string line;
    int line_no = 0;
    std::vector<TimeSeries> series;

    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
    if (split_csv(line) != std::vector<std::string>{"step", "location", "value"})
        parse_fail(path, line_no, "expected header 'step,location,value'");

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3 || fields[2].empty())
            parse_fail(path, line_no, "expected 3 columns 'step,location,value'");
        const int step = static_cast<int>(parse_long(fields[0], path, line_no));
        const std::string& location = fields[1];
        const double value = parse_double(fields[2], path, line_no);

        if (series.empty() || series.back().location != location) {
            for (const auto& s : series)
                if (s.location == location)
                    parse_fail(path, line_no,
                               "rows not sorted by (location, step): location '" + location +
                                   "' reappears");
            series.push_back({location, kind, {}});
        } else if (!series.back().samples.empty() &&
                   step <= series.back().samples.back().first) {
            if (step == series.back().samples.back().first)
                parse_fail(path, line_no, "duplicate step " + fields[0] + " for location '" +
                                              location + "'");
            parse_fail(path, line_no, "rows not sorted by (location, step)");
        }
        series.back().samples.emplace_back(step, value);
    }
    for (const auto& s : series) s.validate();
    return series;
}

void write_timeseries_csv(const std::string& path, const std::vector<TimeSeries>& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "step,location,value\n";
    std::vector<const TimeSeries*> ordered;
    for (const auto& s : series) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const TimeSeries* a, const TimeSeries* b) { return a->location < b->location; });
    char buf[64];
    for (const TimeSeries* s : ordered) {
        for (const auto& [step, value] : s->samples) {
            std::snprintf(buf, sizeof(buf), "%.10g", value);
            out << step << "," << s->location << "," << buf << "\n";
        }
    }
}

TimeSeries fixed_prices(const DataCenter& dc, int steps) {
    TimeSeries out{dc.id, TraceKind::ElectricityPrice, {}};
    out.samples.reserve(steps);
    for (int t = 0; t < steps; ++t) out.samples.emplace_back(t, dc.mean_price_usd_per_kwh);
    return out;
}

TimeSeries synthesize_prices(const TimeSeries& base, const DataCenter& dc, int steps,
                             double step_h) {
    const int offset_steps = static_cast<int>(std::llround(dc.timezone_offset_h / step_h));
    if (!base.covers(-offset_steps, steps - 1 - offset_steps)) {
        std::ostringstream os;
        os << "base price series does not cover steps [" << -offset_steps << ", "
           << steps - 1 - offset_steps << "] needed for location '" << dc.id << "'";
        throw std::invalid_argument(os.str());
    }
    const double mean_shift = dc.mean_price_usd_per_kwh - base.mean();
    TimeSeries out{dc.id, TraceKind::ElectricityPrice, {}};
    out.samples.reserve(steps);
    for (int t = 0; t < steps; ++t) {
        const double value = base.value_at(t - offset_steps) + mean_shift;
        out.samples.emplace_back(t, std::max(value, kPriceFloorUsdPerKwh));
    }
    return out;
}

TimeSeries diurnal_price_base(int first_step, int last_step, double mean_usd_per_kwh,
                              double rel_amplitude, int peak_hour, double rel_noise,
                              std::uint64_t seed, double step_h) {
    Rng rng(seed);
    TimeSeries out{"base", TraceKind::ElectricityPrice, {}};
    out.samples.reserve(last_step - first_step + 1);
    for (int t = first_step; t <= last_step; ++t) {
        const double hour = std::fmod(std::fmod(t * step_h, 24.0) + 24.0, 24.0);
        double value = mean_usd_per_kwh * (1.0 + rel_amplitude * diurnal_wave(hour, peak_hour));
        if (rel_noise > 0) value += mean_usd_per_kwh * rel_noise * (2.0 * rng.uniform01() - 1.0);
        out.samples.emplace_back(t, std::max(value, kPriceFloorUsdPerKwh));
    }
    return out;
}

TimeSeries diurnal_temperatures(const DataCenter& dc, double mean_temp_c, int steps,
                                double amplitude_c, int peak_hour, double noise_c,
                                std::uint64_t seed, double step_h) {
    Rng rng(seed);
    TimeSeries out{dc.id, TraceKind::Temperature, {}};
    out.samples.reserve(steps);
    for (int t = 0; t < steps; ++t) {
        const double local_hour =
            std::fmod(std::fmod(t * step_h + dc.timezone_offset_h, 24.0) + 24.0, 24.0);
        double value = mean_temp_c + amplitude_c * diurnal_wave(local_hour, peak_hour);
        if (noise_c > 0) value += noise_c * (2.0 * rng.uniform01() - 1.0);
        out.samples.emplace_back(t, value);
    }
    return out;
}

void BetaSource::validate() const {
    if (kind == Kind::Fixed && (fixed < 0 || fixed > 1))
        throw std::invalid_argument("beta source: fixed value outside [0,1]");
    if (kind == Kind::ExponentialFit && rate <= 0)
        throw std::invalid_argument("beta source: rate must be > 0");
    if (kind == Kind::FromFile)
        for (double v : file_values)
            if (v < 0 || v > 1)
                throw std::invalid_argument("beta source: file value outside [0,1]");
}

double sample_beta(BetaSource& source, Rng& rng) {
    switch (source.kind) {
        case BetaSource::Kind::Fixed:
            return source.fixed;
        case BetaSource::Kind::ExponentialFit: {
            double x;
            do {
                x = rng.exponential(source.rate);
            } while (x > 1.0);
            return x;
        }
        case BetaSource::Kind::FromFile:
            if (source.next >= source.file_values.size())
                throw std::runtime_error("beta source: file exhausted after " +
                                         std::to_string(source.next) + " values");
            return source.file_values[source.next++];
    }
    throw std::logic_error("beta source: unknown kind");
}

void WorkloadSpec::validate() const {
    if (vm_count < 0) throw std::invalid_argument("workload: vm_count must be >= 0");
    if (cores_min < 1 || cores_max < cores_min)
        throw std::invalid_argument("workload: bad core range");
    if (ram_min_gb <= 0 || ram_max_gb < ram_min_gb)
        throw std::invalid_argument("workload: bad ram range");
    if (sim_steps < 1) throw std::invalid_argument("workload: sim_steps must be >= 1");
    beta.validate();
}

namespace {

std::string padded_id(const char* prefix, int index, int count) {
    int width = 4;
    for (long v = count; v > 9999 && width < 12; v /= 10) ++width;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, index);
    return buf;
}

bool is_integral(double x) { return std::abs(x - std::round(x)) < 1e-9; }

}  // namespace

std::vector<VirtualMachine> generate_workload(const WorkloadSpec& spec, Rng& rng, Rng& beta_rng) {
    spec.validate();
    BetaSource beta = spec.beta;  // local cursor
    std::vector<VirtualMachine> out;
    out.reserve(spec.vm_count);
    const bool whole_gb = is_integral(spec.ram_min_gb) && is_integral(spec.ram_max_gb);

    // Every VM draws from a stream derived from its index, so workloads of
    // different sizes share a common prefix: sweeps over the VM count see
    // nested workloads instead of a full reshuffle.
    const std::uint64_t structure_base = rng.next_u64();
    const std::uint64_t beta_base = beta_rng.next_u64();

    for (int i = 0; i < spec.vm_count; ++i) {
        Rng vm_rng(Rng::derive(structure_base, static_cast<std::uint64_t>(i)));
        VirtualMachine vm;
        vm.id = padded_id("vm", i, spec.vm_count);
        vm.cores = static_cast<int>(vm_rng.uniform_int(spec.cores_min, spec.cores_max));
        vm.ram_gb = whole_gb ? static_cast<double>(vm_rng.uniform_int(
                                   static_cast<long>(spec.ram_min_gb),
                                   static_cast<long>(spec.ram_max_gb)))
                             : vm_rng.uniform(spec.ram_min_gb, spec.ram_max_gb);
        vm.boot_step = static_cast<int>(vm_rng.uniform_int(0, spec.sim_steps - 1));
        vm.delete_step = static_cast<int>(vm_rng.uniform_int(vm.boot_step + 1, spec.sim_steps));
        if (beta.kind == BetaSource::Kind::ExponentialFit) {
            Rng per_vm_beta_rng(Rng::derive(beta_base, static_cast<std::uint64_t>(i)));
            BetaSource per_vm = beta;
            vm.beta = sample_beta(per_vm, per_vm_beta_rng);
        } else {
            vm.beta = sample_beta(beta, beta_rng);
        }
        vm.validate();
        out.push_back(std::move(vm));
    }
    return out;
}

std::vector<VirtualMachine> load_workload_csv(const std::string& path) {
    std::ifstream in = open_or_fail(path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
    const std::vector<std::string> header = {"vm_id", "cores",     "ram_gb",
                                             "beta",  "boot_step", "delete_step"};
    if (split_csv(line) != header)
        parse_fail(path, line_no, "expected header 'vm_id,cores,ram_gb,beta,boot_step,delete_step'");

    std::vector<VirtualMachine> out;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 6) parse_fail(path, line_no, "expected 6 columns");
        VirtualMachine vm;
        vm.id = fields[0];
        vm.cores = static_cast<int>(parse_long(fields[1], path, line_no));
        vm.ram_gb = parse_double(fields[2], path, line_no);
        vm.beta = parse_double(fields[3], path, line_no);
        vm.boot_step = static_cast<int>(parse_long(fields[4], path, line_no));
        vm.delete_step = static_cast<int>(parse_long(fields[5], path, line_no));
        if (!seen.insert(vm.id).second) parse_fail(path, line_no, "duplicate vm_id " + vm.id);
        try {
            vm.validate();
        } catch (const std::exception& e) {
            parse_fail(path, line_no, e.what());
        }
        out.push_back(std::move(vm));
    }
    return out;
}

std::vector<double> betas_from_usage_csv(const std::string& path) {
    std::ifstream in = open_or_fail(path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++line_no;
    if (split_csv(line) != std::vector<std::string>{"vm_id", "usage"})
        parse_fail(path, line_no, "expected header 'vm_id,usage'");

    std::vector<std::string> order;
    std::map<std::string, std::pair<double, long>> sums;  // vm -> (sum, count)
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 2) parse_fail(path, line_no, "expected 2 columns 'vm_id,usage'");
        const double usage = parse_double(fields[1], path, line_no);
        if (usage < 0 || usage > 1)
            parse_fail(path, line_no, "usage outside [0,1]");
        auto [it, inserted] = sums.try_emplace(fields[0], 0.0, 0L);
        if (inserted) order.push_back(fields[0]);
        it->second.first += usage;
        it->second.second += 1;
    }
    std::vector<double> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        const auto& [sum, count] = sums.at(id);
        out.push_back(sum / static_cast<double>(count));
    }
    return out;
}

}  // namespace wattvm

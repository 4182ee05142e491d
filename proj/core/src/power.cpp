#include "wattvm/power.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wattvm {

void CubicPowerParams::validate() const {
    if (p_idle_w < 0) throw std::invalid_argument("power: p_idle_w must be >= 0");
    if (p_base_w <= p_idle_w) throw std::invalid_argument("power: p_base_w must exceed p_idle_w");
    if (p_dif_w < 0) throw std::invalid_argument("power: p_dif_w must be >= 0");
}

void MulticorePowerParams::validate(std::span<const double> q_levels) const {
    if (p_max_core_w <= 0) throw std::invalid_argument("power: p_max_core_w must be > 0");
    if (max_cores < 1) throw std::invalid_argument("power: max_cores must be >= 1");
    for (double q : q_levels) {
        for (int c = 0; c <= max_cores; ++c) {
            const double peak = multicore_peak_power_w(q, c, *this);
            const double idle = multicore_idle_power_w(q, *this);
            if (peak < idle - 1e-9) {
                std::ostringstream os;
                os << "power: multicore peak (" << peak << " W) below idle (" << idle
                   << " W) at q=" << q << ", cores=" << c;
                throw std::invalid_argument(os.str());
            }
        }
    }
}

void CoolingParams::validate() const {
    if (min_overhead < 0 || min_overhead > reference_overhead || reference_overhead > max_overhead)
        throw std::invalid_argument(
            "cooling: need 0 <= min_overhead <= reference_overhead <= max_overhead");
}

double peak_power_w(double f_ghz, const FrequencyLadder& ladder, const CubicPowerParams& p) {
    if (f_ghz < ladder.base_ghz - 1e-9) {
        std::ostringstream os;
        os << "peak power undefined below the reference frequency (" << f_ghz << " < "
           << ladder.base_ghz << " GHz)";
        throw std::domain_error(os.str());
    }
    const double rel = (f_ghz - ladder.base_ghz) / ladder.base_ghz;
    return p.p_base_w + p.p_dif_w * rel * rel * rel;
}

double pm_power_w(double f_ghz, double util, const CubicPowerParams& p,
                  const FrequencyLadder& ladder) {
    if (util < 0.0 || util > 1.0) {
        std::ostringstream os;
        os << "utilisation " << util << " outside [0,1]";
        throw std::domain_error(os.str());
    }
    return p.p_idle_w + util * (peak_power_w(f_ghz, ladder, p) - p.p_idle_w);
}

double unitless_frequency(double f_ghz, const FrequencyLadder& ladder) {
    const double span = ladder.max_ghz - ladder.min_ghz;
    if (span <= 0) return 1.0;  // single-level ladder
    return (f_ghz - ladder.min_ghz) / span;
}

double multicore_peak_power_w(double q, double active_cores, const MulticorePowerParams& p) {
    if (active_cores < 0 || active_cores > p.max_cores) {
        std::ostringstream os;
        os << "active core count " << active_cores << " outside [0, " << p.max_cores << "]";
        throw std::domain_error(os.str());
    }
    const double c = active_cores;
    return p.p00 + p.p10 * q + p.p01 * c + p.p20 * q * q + p.p11 * q * c + p.p30 * q * q * q +
           p.p21 * q * q * c;
}

double multicore_idle_power_w(double q, const MulticorePowerParams& p) {
    return p.p00 + p.p10 * q + p.p20 * q * q + p.p30 * q * q * q;
}

double gamma_core(double beta, const MulticorePowerParams& p) {
    const double raw =
        (p.gamma_poly[0] * beta * beta + p.gamma_poly[1] * beta + p.gamma_poly[2]) / p.p_max_core_w;
    return std::clamp(raw, 0.0, 1.0);
}

double multicore_pm_power_w(double q, std::span<const double> per_core_betas,
                            const MulticorePowerParams& p) {
    const double cores_active = static_cast<double>(per_core_betas.size());
    if (per_core_betas.empty()) return multicore_idle_power_w(q, p);
    double gamma_sum = 0;
    for (double beta : per_core_betas) gamma_sum += gamma_core(beta, p);
    const double u = gamma_sum / cores_active;
    const double idle = multicore_idle_power_w(q, p);
    const double peak = multicore_peak_power_w(q, cores_active, p);
    return idle + (peak - idle) * u;
}

double cooling_overhead_factor(double temp_c, const CoolingParams& cp) {
    const double raw = cp.reference_overhead + cp.slope_per_c * (temp_c - cp.reference_temp_c);
    return std::clamp(raw, cp.min_overhead, cp.max_overhead);
}

namespace {

// Solves a dense linear system in place with partial pivoting.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            throw std::runtime_error("multicore calibration: singular system");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (int k = col; k < n; ++k) a[r][k] -= factor * a[col][k];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double sum = b[r];
        for (int k = r + 1; k < n; ++k) sum -= a[r][k] * x[k];
        x[r] = sum / a[r][r];
    }
    return x;
}

std::array<double, 7> basis(double q, double c) {
    return {1.0, q, c, q * q, q * c, q * q * q, q * q * c};
}

}  // namespace

MulticorePowerParams calibrate_multicore_params(const CubicPowerParams& cubic,
                                                const FrequencyLadder& ladder, int max_cores) {
    if (max_cores < 1) throw std::invalid_argument("calibration: max_cores must be >= 1");
    cubic.validate();
    ladder.validate();

    // Target: the cubic model with utilisation read as the busy-core share.
    auto target = [&](double q, double c) {
        const double f = ladder.min_ghz + q * (ladder.max_ghz - ladder.min_ghz);
        const double util = c / max_cores;
        return pm_power_w(f, util, cubic, ladder);
    };

    std::vector<std::array<double, 7>> rows;
    std::vector<double> values;
    for (double f : ladder.levels()) {
        const double q = unitless_frequency(f, ladder);
        for (int c = 0; c <= max_cores; ++c) {
            rows.push_back(basis(q, c));
            values.push_back(target(q, static_cast<double>(c)));
        }
    }

    // Equality-constrained least squares via the KKT system: the top-frequency
    // full-load and idle points are interpolated exactly.
    const std::array<std::array<double, 7>, 2> constraints = {
        basis(1.0, static_cast<double>(max_cores)), basis(1.0, 0.0)};
    const std::array<double, 2> constraint_values = {target(1.0, max_cores), target(1.0, 0.0)};

    constexpr int kP = 7;
    const int n = kP + 2;
    std::vector<std::vector<double>> kkt(n, std::vector<double>(n, 0.0));
    std::vector<double> rhs(n, 0.0);
    for (int i = 0; i < kP; ++i) {
        for (int j = 0; j < kP; ++j) {
            double s = 0;
            for (size_t r = 0; r < rows.size(); ++r) s += rows[r][i] * rows[r][j];
            kkt[i][j] = 2.0 * s;
        }
        double s = 0;
        for (size_t r = 0; r < rows.size(); ++r) s += rows[r][i] * values[r];
        rhs[i] = 2.0 * s;
    }
    for (int ci = 0; ci < 2; ++ci) {
        for (int j = 0; j < kP; ++j) {
            kkt[kP + ci][j] = constraints[ci][j];
            kkt[j][kP + ci] = constraints[ci][j];
        }
        rhs[kP + ci] = constraint_values[ci];
    }
    const std::vector<double> sol = solve_linear(std::move(kkt), std::move(rhs));

    MulticorePowerParams p;
    p.p00 = sol[0];
    p.p10 = sol[1];
    p.p01 = sol[2];
    p.p20 = sol[3];
    p.p11 = sol[4];
    p.p30 = sol[5];
    p.p21 = sol[6];
    p.max_cores = max_cores;
    p.p_max_core_w =
        (peak_power_w(ladder.max_ghz, ladder, cubic) - cubic.p_idle_w) / max_cores;
    // Default core weighting: an I/O-bound core still draws 30% of its peak.
    p.gamma_poly = {0.0, 0.7 * p.p_max_core_w, 0.3 * p.p_max_core_w};

    double sq_sum = 0, max_abs = 0;
    for (size_t r = 0; r < rows.size(); ++r) {
        double fit = 0;
        for (int j = 0; j < kP; ++j) fit += rows[r][j] * sol[j];
        const double res = fit - values[r];
        sq_sum += res * res;
        max_abs = std::max(max_abs, std::abs(res));
    }
    p.calibration_rms_w = std::sqrt(sq_sum / rows.size());
    p.calibration_max_abs_w = max_abs;
    p.calibrated = true;

    std::vector<double> qs;
    for (double f : ladder.levels()) qs.push_back(unitless_frequency(f, ladder));
    p.validate(qs);
    return p;
}

double pm_it_power_w(const PowerModel& model, const FrequencyLadder& ladder, double f_ghz,
                     double util, std::span<const double> per_core_betas) {
    if (model.kind == PowerModelKind::Cubic)
        return pm_power_w(f_ghz, util, model.cubic, ladder);
    if (!model.multicore)
        throw std::invalid_argument("power: multicore model selected without parameters");
    return multicore_pm_power_w(unitless_frequency(f_ghz, ladder), per_core_betas,
                                *model.multicore);
}

}  // namespace wattvm

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hgfm {

struct ConverterGains {
    double k_p = 0.0;
    double k_omega = 0.0;
    double delta_theta = 0.0;   // phase offset, does not affect the frequency
    std::optional<double> m_p;  // power-balancing droop, only used by that baseline
};

using GainTable = std::map<std::string, ConverterGains>;

// Converter frequency deviation from dc voltage rate and deviation.
[[nodiscard]] double pd_frequency(double dv_dt, double v_dev, const ConverterGains& gains);

// Discrete PI form of the same control: theta = theta_star + delta_theta + k_p v_dev + k_omega gamma,
// with gamma integrated by the trapezoidal rule.
class PiPhaseController {
public:
    PiPhaseController(ConverterGains gains, double theta_star = 0.0, double delta_theta = 0.0,
                      double v_dev0 = 0.0);

    // Advance by h with the new voltage deviation and return the phase angle.
    double step(double v_dev, double h);

    [[nodiscard]] double theta() const noexcept;
    [[nodiscard]] double gamma() const noexcept { return gamma_; }

private:
    ConverterGains gains_;
    double theta_star_;
    double delta_theta_;
    double gamma_ = 0.0;
    double v_prev_;
};

// Power-balancing grid-following baseline: omega = m_p * p_ac.
[[nodiscard]] double power_balancing_frequency(double p_ac, const ConverterGains& gains);

// Effective droop coefficients (frequency deviation per unit of power).
[[nodiscard]] double effective_droop_governor(double k_g);
[[nodiscard]] double effective_droop_pv(double k_omega, double k_pv);
[[nodiscard]] double effective_droop_dc_source(double k_omega, double k_g);
[[nodiscard]] double effective_droop_wind(double k_omega_grid, double k_omega_machine, double k_g,
                                          double k_w);

// Upper bound on k_omega from a frequency band and a dc voltage band.
[[nodiscard]] double k_omega_max(double delta_omega_max, double delta_v_max);

struct GainAdvisory {
    std::string converter;
    double k_omega = 0.0;
    double bound = 0.0;
    bool exceeds = false;
};

[[nodiscard]] std::vector<GainAdvisory> check_gain_bounds(const GainTable& gains,
                                                          double delta_omega_max,
                                                          double delta_v_max);

}  // namespace hgfm

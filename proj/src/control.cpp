#include "hgfm/control.hpp"

#include "hgfm/error.hpp"

#include <cmath>

namespace hgfm {

double pd_frequency(double dv_dt, double v_dev, const ConverterGains& gains) {
    return gains.k_p * dv_dt + gains.k_omega * v_dev;
}

PiPhaseController::PiPhaseController(ConverterGains gains, double theta_star, double delta_theta,
                                     double v_dev0)
    : gains_(gains), theta_star_(theta_star), delta_theta_(delta_theta), v_prev_(v_dev0) {}

double PiPhaseController::step(double v_dev, double h) {
    gamma_ += 0.5 * h * (v_prev_ + v_dev);
    v_prev_ = v_dev;
    return theta();
}

double PiPhaseController::theta() const noexcept {
    return theta_star_ + delta_theta_ + gains_.k_p * v_prev_ + gains_.k_omega * gamma_;
}

double power_balancing_frequency(double p_ac, const ConverterGains& gains) {
    if (!gains.m_p) {
        throw Error(ErrorCode::MissingDroop, "power-balancing control needs a droop m_p");
    }
    return *gains.m_p * p_ac;
}

namespace {

double inverse_positive(double value, const char* what) {
    if (!(value > 0.0)) {
        throw Error(ErrorCode::ZeroSensitivity, std::string(what) + " must be positive");
    }
    return 1.0 / value;
}

}  // namespace

double effective_droop_governor(double k_g) { return inverse_positive(k_g, "k_g"); }

double effective_droop_pv(double k_omega, double k_pv) {
    return k_omega * inverse_positive(k_pv, "k_pv");
}

double effective_droop_dc_source(double k_omega, double k_g) {
    return k_omega * inverse_positive(k_g, "k_g");
}

double effective_droop_wind(double k_omega_grid, double k_omega_machine, double k_g, double k_w) {
    if (!(k_omega_machine > 0.0)) {
        throw Error(ErrorCode::ZeroSensitivity, "machine-side k_omega must be positive");
    }
    return k_omega_grid / k_omega_machine * inverse_positive(k_g + k_w, "k_g + k_w");
}

double k_omega_max(double delta_omega_max, double delta_v_max) {
    if (!(delta_omega_max > 0.0) || !(delta_v_max > 0.0)) {
        throw Error(ErrorCode::DomainError, "frequency and voltage bands must be positive");
    }
    return delta_omega_max / delta_v_max;
}

std::vector<GainAdvisory> check_gain_bounds(const GainTable& gains, double delta_omega_max,
                                            double delta_v_max) {
    const double bound = k_omega_max(delta_omega_max, delta_v_max);
    std::vector<GainAdvisory> out;
    for (const auto& [id, g] : gains) {
        out.push_back(GainAdvisory{id, g.k_omega, bound, g.k_omega > bound * (1.0 + 1e-12)});
    }
    return out;
}

}  // namespace hgfm

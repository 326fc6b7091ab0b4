#pragma once

#include "hgfm/network.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hgfm {

// ---------------------------------------------------------------------------
// Photovoltaic array (single-diode model)
// ---------------------------------------------------------------------------

// Module quantities are SI (A, V, Ohm). The array is n_series x n_parallel modules and the
// terminal voltage/current/power seen by callers are per unit of voltage_base and power_base.
struct PvParams {
    double i_L = 9.8;
    double i_0 = 7.5e-10;
    double v_t = 60 * 0.025693;
    double alpha = 1.1;
    double R_s = 0.3;
    double R_p = 300.0;
    double n_series = 1.0;
    double n_parallel = 1.0;
    double voltage_base = 1.0;  // V
    double power_base = 1.0;    // W
};

// Module-level current for a module voltage (SI).
[[nodiscard]] double pv_module_current(double v_module, const PvParams& p);
[[nodiscard]] double pv_module_residual(double v_module, double i_module, const PvParams& p);

// Array current and power in per unit.
[[nodiscard]] double pv_current(double v, const PvParams& p);
[[nodiscard]] double pv_power(double v, const PvParams& p);
[[nodiscard]] double pv_open_circuit_voltage(const PvParams& p);

struct MppPoint {
    double x = 0.0;  // voltage for PV, rotor speed for WT
    double p = 0.0;
};

[[nodiscard]] MppPoint pv_mpp(const PvParams& p);
// k_pv = -dP/dv at an operating voltage on the stable branch.
[[nodiscard]] double pv_sensitivity(double v_op, const PvParams& p);
// Voltage on the stable branch delivering fraction * P_mpp.
[[nodiscard]] double pv_operating_voltage(const PvParams& p, double fraction);
// Rescale voltage_base so the curtailed operating point sits at v_bus per unit.
[[nodiscard]] PvParams anchor_pv_voltage(PvParams p, double fraction, double v_bus);

// ---------------------------------------------------------------------------
// Wind turbine
// ---------------------------------------------------------------------------

struct CpCoefficients {
    std::array<double, 6> c{0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068};
};

struct PitchControl {
    double T_g = 0.2;
    double k_bp = 0.0;
};

struct WtParams {
    double rho = 1.225;
    double radius = 63.0;
    double v_w = 12.0;
    double omega_base = 1.6;  // rad/s per unit rotor speed
    double power_base = 1.0;  // W per unit power
    CpCoefficients cp;
    PitchControl pitch;
};

[[nodiscard]] double power_coefficient(double lambda, double beta, const CpCoefficients& cp);
[[nodiscard]] double tip_speed_ratio(double omega, const WtParams& p);
[[nodiscard]] double wt_power(double omega, double beta, const WtParams& p);
[[nodiscard]] MppPoint wt_mpp(const WtParams& p);
// Upper end of the admissible speed region: first C_p zero above the MPP speed.
[[nodiscard]] double wt_max_speed(const WtParams& p);
// Scale power_base so that P_mpp at the current wind speed equals target.
[[nodiscard]] WtParams calibrate_wt_power_base(WtParams p, double target);

struct WtSensitivities {
    double k_w = 0.0;     // -dP/domega
    double k_beta = 0.0;  // -dP/dbeta
    double k_g = 0.0;     // k_beta * k_bp
};

[[nodiscard]] WtSensitivities wt_sensitivities(double omega, double beta, const WtParams& p);
// Speed above the MPP speed delivering fraction * P_mpp.
[[nodiscard]] double wt_operating_speed(const WtParams& p, double fraction);

// ---------------------------------------------------------------------------
// Device records attached to graph nodes
// ---------------------------------------------------------------------------

struct Governor {
    double T_g = 1.0;
    double k_g = 0.0;
    double p_star = 0.0;
};

struct WindDrive {
    WtParams params;
    double beta_star = 0.0;
};

struct MachineParams {
    double J = 1.0;
    double omega_star = 1.0;
    std::optional<Governor> governor;
    std::optional<WindDrive> wind;  // omega_star is the turbine operating speed
};

struct ControllableDc {
    double T_g = 1.0;
    double k_g = 0.0;
    double p_star = 0.0;
};

struct PvSource {
    PvParams params;  // anchored so that the bus setpoint v_star is the operating voltage
};

struct DcBusParams {
    double C = 1.0;
    double v_star = 1.0;
    std::variant<std::monostate, ControllableDc, PvSource> source;
};

struct DeviceSet {
    std::map<std::string, MachineParams> machines;
    std::map<std::string, DcBusParams> buses;  // converters and dc nodes
};

enum class SourceKind { None, Governor, Wind, Controllable, Pv };

struct NodeSensitivity {
    SourceKind source = SourceKind::None;
    double k_g = 0.0;
    double T_g = 0.0;
    double k_w = 0.0;
    double k_beta = 0.0;
    double k_pv = 0.0;
};

using SensitivityTable = std::map<std::string, NodeSensitivity>;

[[nodiscard]] SensitivityTable compute_sensitivities(const DeviceSet& devices);

struct Classification {
    std::vector<std::size_t> r;      // k_g > 0
    std::vector<std::size_t> zs;     // source with k_g = 0
    std::vector<std::size_t> pv;     // k_pv > 0
    std::vector<std::size_t> w;      // k_w > 0
    std::vector<std::size_t> other;  // no source term
};

[[nodiscard]] Classification classify_nodes(const SystemGraph& graph, const SensitivityTable& sens);

// Checks that every device record matches a graph node of the right kind.
void validate_devices(const SystemGraph& graph, const DeviceSet& devices);

}  // namespace hgfm

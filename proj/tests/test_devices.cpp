#include <catch2/catch_amalgamated.hpp>

#include "hgfm/devices.hpp"
#include "hgfm/error.hpp"

#include <cmath>
#include <numbers>

using namespace hgfm;
using Catch::Approx;

namespace {

// Single-diode module equation solved by plain bisection.
double module_current_oracle(double v, const PvParams& p) {
    auto f = [&](double i) {
        const double vd = v + p.R_s * i;
        return i - p.i_L + p.i_0 * (std::exp(vd / (p.alpha * p.v_t)) - 1.0) + vd / p.R_p;
    };
    double lo = -100.0, hi = 100.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

template <typename F>
std::pair<double, double> grid_argmax(F f, double lo, double hi, double step) {
    double best_x = lo, best = f(lo);
    for (double x = lo; x <= hi; x += step) {
        const double y = f(x);
        if (y > best) {
            best = y;
            best_x = x;
        }
    }
    return {best_x, best};
}

PvParams plant() {
    PvParams p;
    p.n_series = 90;
    p.n_parallel = 5000;
    p.power_base = 100e6;
    return anchor_pv_voltage(p, 1.0, 1.0);
}

double cp_oracle(double lambda, double beta) {
    const double inv = 1.0 / (lambda + 0.08 * beta) - 0.035 / (beta * beta * beta + 1.0);
    return std::max(0.0, 0.5176 * (116.0 * inv - 0.4 * beta - 5.0) * std::exp(-21.0 * inv) + 0.0068 * lambda);
}

}  // namespace

TEST_CASE("pv module current solves the diode equation", "[devices][pv]") {
    const PvParams p;
    for (double v = 0.0; v <= 45.0; v += 0.75) {
        const double i = pv_module_current(v, p);
        CHECK(std::abs(pv_module_residual(v, i, p)) < 1e-10);
        CHECK(i == Approx(module_current_oracle(v, p)).margin(1e-9));
    }
}

TEST_CASE("pv MPP matches a fine grid scan", "[devices][pv][oracle]") {
    const PvParams p = plant();
    const MppPoint mpp = pv_mpp(p);
    const double voc = pv_open_circuit_voltage(p);
    const auto [v_grid, p_grid] = grid_argmax([&](double v) { return pv_power(v, p); }, 0.0, voc, 1e-4);
    CHECK(std::abs(mpp.x - v_grid) <= 1e-3);
    CHECK(mpp.p >= p_grid - 1e-9);
    // Anchoring at full output puts the MPP at 1 p.u.
    CHECK(mpp.x == Approx(1.0).margin(1e-6));
    const double h = 1e-6;
    const double slope = (pv_power(mpp.x + h, p) - pv_power(mpp.x - h, p)) / (2.0 * h);
    CHECK(std::abs(slope) <= 1e-6);
    CHECK(pv_sensitivity(mpp.x, p) == 0.0);
}

TEST_CASE("curtailed pv has positive sensitivity and rejects the unstable branch", "[devices][pv]") {
    PvParams raw;
    raw.n_series = 90;
    raw.n_parallel = 5000;
    raw.power_base = 100e6;
    const PvParams p = anchor_pv_voltage(raw, 0.95, 1.0);
    const MppPoint mpp = pv_mpp(p);
    CHECK(pv_power(1.0, p) == Approx(0.95 * mpp.p).epsilon(1e-8));
    const double k = pv_sensitivity(1.0, p);
    CHECK(k > 0.0);
    const double h = 1e-5;
    CHECK(k == Approx(-(pv_power(1.0 + h, p) - pv_power(1.0 - h, p)) / (2.0 * h)).epsilon(1e-5));
    CHECK_THROWS_AS(pv_sensitivity(0.9 * mpp.x, p), Error);
}

TEST_CASE("wind turbine curve, MPP and calibration", "[devices][wt][oracle]") {
    const WtParams p = calibrate_wt_power_base(WtParams{}, 0.75);
    const MppPoint mpp = wt_mpp(p);
    CHECK(mpp.p == Approx(0.75).margin(1e-6));

    const double lam_hi = 20.0 * p.v_w / (p.radius * p.omega_base);
    const auto [w_grid, p_grid] = grid_argmax([&](double w) { return wt_power(w, 0.0, p); }, 0.05, lam_hi, 1e-4);
    CHECK(std::abs(mpp.x - w_grid) <= 1e-3);
    CHECK(mpp.p >= p_grid - 1e-9);

    // Independent evaluation of the power curve.
    const double swept = 0.5 * p.rho * std::numbers::pi * p.radius * p.radius * std::pow(p.v_w, 3);
    for (double w : {0.6, 0.9, 1.1}) {
        const double lambda = p.radius * w * p.omega_base / p.v_w;
        CHECK(wt_power(w, 0.0, p) == Approx(swept * cp_oracle(lambda, 0.0) / p.power_base).epsilon(1e-12));
        CHECK(wt_power(w, 2.0, p) == Approx(swept * cp_oracle(lambda, 2.0) / p.power_base).epsilon(1e-12));
    }

    const double h = 1e-6;
    const double slope = (wt_power(mpp.x + h, 0.0, p) - wt_power(mpp.x - h, 0.0, p)) / (2.0 * h);
    CHECK(std::abs(slope) <= 1e-6);
    CHECK(wt_sensitivities(mpp.x, 0.0, p).k_w == Approx(0.0).margin(1e-6));
}

TEST_CASE("wind turbine curtailment by rotor speed", "[devices][wt]") {
    WtParams p = calibrate_wt_power_base(WtParams{}, 0.75);
    p.pitch.k_bp = 2.0;
    const MppPoint mpp = wt_mpp(p);
    const double w = wt_operating_speed(p, 0.9);
    CHECK(w > mpp.x);
    CHECK(w < wt_max_speed(p));
    CHECK(wt_power(w, 0.0, p) == Approx(0.9 * 0.75).epsilon(1e-9));
    const WtSensitivities s = wt_sensitivities(w, 0.0, p);
    CHECK(s.k_w > 0.0);
    CHECK(s.k_beta > 0.0);
    CHECK(s.k_g == Approx(2.0 * s.k_beta));
    CHECK_THROWS_AS(power_coefficient(0.0, 0.0, p.cp), Error);
    CHECK_THROWS_AS(wt_operating_speed(p, 1.2), Error);
}

TEST_CASE("sensitivities and node classification", "[devices]") {
    const SystemGraph g({{"SG", NodeKind::Machine},
                         {"SC", NodeKind::Machine},
                         {"WT", NodeKind::Machine},
                         {"V1", NodeKind::Converter},
                         {"V2", NodeKind::Converter},
                         {"B", NodeKind::DcNode},
                         {"PV", NodeKind::DcNode}},
                        {{0, 3, 1.0}, {1, 3, 1.0}, {2, 4, 1.0}, {3, 4, 1.0}},
                        {{3, 5, 1.0}, {4, 6, 1.0}});
    DeviceSet d;
    MachineParams sg;
    sg.governor = Governor{0.5, 0.0, 0.0};  // no droop: zero sensitivity
    d.machines["SG"] = sg;
    d.machines["SC"] = MachineParams{};
    MachineParams wt;
    WindDrive drive;
    drive.params = calibrate_wt_power_base(WtParams{}, 0.75);
    wt.omega_star = wt_operating_speed(drive.params, 0.9);
    wt.wind = drive;
    d.machines["WT"] = wt;
    d.buses["V1"] = DcBusParams{};
    d.buses["V2"] = DcBusParams{};
    d.buses["B"] = DcBusParams{1.0, 1.0, ControllableDc{0.2, 3.0, 0.0}};
    PvParams pv;
    pv.n_series = 90;
    pv.n_parallel = 100;
    pv.power_base = 1e6;
    d.buses["PV"] = DcBusParams{1.0, 1.0, PvSource{anchor_pv_voltage(pv, 0.95, 1.0)}};
    validate_devices(g, d);
    const SensitivityTable s = compute_sensitivities(d);
    const Classification c = classify_nodes(g, s);
    auto ids = [&](const std::vector<std::size_t>& v) {
        std::vector<std::string> out;
        for (auto i : v) out.push_back(g.node(i).id);
        return out;
    };
    CHECK(ids(c.r) == std::vector<std::string>{"B"});
    CHECK(ids(c.zs) == std::vector<std::string>{"SG", "WT"});
    CHECK(ids(c.pv) == std::vector<std::string>{"PV"});
    CHECK(ids(c.w) == std::vector<std::string>{"WT"});
    CHECK(ids(c.other) == std::vector<std::string>{"SC", "V1", "V2"});

    d.buses.erase("PV");
    CHECK_THROWS_AS(validate_devices(g, d), Error);
}

TEST_CASE("wind turbine below the MPP speed is rejected", "[devices][wt]") {
    DeviceSet d;
    MachineParams wt;
    WindDrive drive;
    drive.params = calibrate_wt_power_base(WtParams{}, 0.75);
    wt.omega_star = 0.8 * wt_mpp(drive.params).x;
    wt.wind = drive;
    d.machines["WT"] = wt;
    try {
        (void)compute_sensitivities(d);
        FAIL("expected UnstableRegion");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnstableRegion);
    }
}

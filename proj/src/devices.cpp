#include "hgfm/devices.hpp"

#include "hgfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace hgfm {

namespace {

constexpr int kMaxNewton = 200;
constexpr double kResidualTol = 1e-10;
constexpr int kScanPoints = 1000;

double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

MppPoint scan_and_refine(const std::function<double(double)>& f, double lo, double hi) {
    std::size_t best = 0;
    double best_p = -std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / kScanPoints;
    for (int k = 0; k <= kScanPoints; ++k) {
        const double p = f(lo + step * k);
        if (p > best_p) {
            best_p = p;
            best = static_cast<std::size_t>(k);
        }
    }
    const double a = lo + step * (best == 0 ? 0.0 : static_cast<double>(best) - 1.0);
    const double b = std::min(hi, lo + step * (static_cast<double>(best) + 1.0));
    const double x = golden_max(f, a, b, 1e-13 * std::max(1.0, std::abs(hi)));
    const double px = f(x);
    if (px >= best_p) return {x, px};
    return {lo + step * static_cast<double>(best), best_p};
}

// Root of a decreasing function on [lo, hi] with f(lo) >= 0 >= f(hi).
double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorCode::DomainError, std::string(what) + " must be positive and finite");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// PV
// ---------------------------------------------------------------------------

double pv_module_residual(double v, double i, const PvParams& p) {
    const double vd = v + p.R_s * i;
    return i - p.i_L + p.i_0 * std::expm1(vd / (p.alpha * p.v_t)) + vd / p.R_p;
}

double pv_module_current(double v, const PvParams& p) {
    if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "pv voltage is not finite");
    const double a = p.alpha * p.v_t;
    auto f = [&](double i) { return pv_module_residual(v, i, p); };
    auto fp = [&](double i) {
        return 1.0 + p.i_0 * p.R_s / a * std::exp((v + p.R_s * i) / a) + p.R_s / p.R_p;
    };
    double lo = -p.i_L;
    double hi = p.i_L + v / p.R_p + 1.0;
    for (int k = 0; k < 200 && f(lo) > 0.0; ++k) lo = 2.0 * lo - 1.0;
    for (int k = 0; k < 200 && f(hi) < 0.0; ++k) hi = 2.0 * hi + 1.0;
    double i = std::clamp(p.i_L - v / p.R_p, lo, hi);
    for (int it = 0; it < kMaxNewton; ++it) {
        const double fi = f(i);
        if (std::abs(fi) < kResidualTol) return i;
        if (fi > 0.0) {
            hi = i;
        } else {
            lo = i;
        }
        const double next = i - fi / fp(i);
        if (std::isfinite(next) && next > lo && next < hi) {
            i = next;
        } else {
            i = 0.5 * (lo + hi);
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(i))) {
            return i;
        }
    }
    throw Error(ErrorCode::NoConvergence, "pv current solve did not converge");
}

double pv_current(double v, const PvParams& p) {
    const double v_phys = v * p.voltage_base;
    const double i_mod = pv_module_current(v_phys / p.n_series, p);
    return i_mod * p.n_parallel * p.voltage_base / p.power_base;
}

double pv_power(double v, const PvParams& p) { return v * pv_current(v, p); }

double pv_open_circuit_voltage(const PvParams& p) {
    if (p.i_L <= 0.0) return 0.0;
    const double a = p.alpha * p.v_t;
    auto g = [&](double v) { return -(-p.i_L + p.i_0 * std::expm1(v / a) + v / p.R_p); };
    const double hi = a * std::log(p.i_L / p.i_0 + 1.0) + 1.0;
    const double v_mod = bisect_decreasing(g, 0.0, hi);
    return v_mod * p.n_series / p.voltage_base;
}

MppPoint pv_mpp(const PvParams& p) {
    const double voc = pv_open_circuit_voltage(p);
    if (voc <= 0.0) return {0.0, 0.0};
    return scan_and_refine([&](double v) { return pv_power(v, p); }, 0.0, voc);
}

double pv_sensitivity(double v_op, const PvParams& p) {
    const double voc = pv_open_circuit_voltage(p);
    if (v_op > voc || v_op < 0.0) {
        throw Error(ErrorCode::DomainError, "pv operating voltage outside [0, v_oc]");
    }
    const MppPoint mpp = pv_mpp(p);
    if (v_op < mpp.x - 1e-6 * voc) {
        throw Error(ErrorCode::UnstableRegion, "pv operating voltage below the MPP voltage");
    }
    if (std::abs(v_op - mpp.x) <= 1e-6 * voc) return 0.0;
    const double h = 1e-6 * voc;
    const double k = -(pv_power(v_op + h, p) - pv_power(v_op - h, p)) / (2.0 * h);
    return std::max(0.0, k);
}

double pv_operating_voltage(const PvParams& p, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw Error(ErrorCode::DomainError, "curtailment fraction must lie in (0, 1]");
    }
    const MppPoint mpp = pv_mpp(p);
    if (fraction == 1.0) return mpp.x;
    const double target = fraction * mpp.p;
    return bisect_decreasing([&](double v) { return pv_power(v, p) - target; }, mpp.x,
                             pv_open_circuit_voltage(p));
}

PvParams anchor_pv_voltage(PvParams p, double fraction, double v_bus) {
    require_positive(v_bus, "bus voltage");
    const double v_op = pv_operating_voltage(p, fraction);
    p.voltage_base = v_op * p.voltage_base / v_bus;
    return p;
}

// ---------------------------------------------------------------------------
// Wind turbine
// ---------------------------------------------------------------------------

namespace {

double raw_power_coefficient(double lambda, double beta, const CpCoefficients& k) {
    const auto& c = k.c;
    const double inv = 1.0 / (lambda + 0.08 * beta) - 0.035 / (beta * beta * beta + 1.0);
    return c[0] * (c[1] * inv - c[2] * beta - c[3]) * std::exp(-c[4] * inv) + c[5] * lambda;
}

double swept_power(const WtParams& p) {
    return 0.5 * p.rho * std::numbers::pi * p.radius * p.radius * p.v_w * p.v_w * p.v_w;
}

double speed_for_lambda(double lambda, const WtParams& p) {
    return lambda * p.v_w / (p.radius * p.omega_base);
}

constexpr double kLambdaScanMax = 20.0;

}  // namespace

double power_coefficient(double lambda, double beta, const CpCoefficients& cp) {
    if (!(lambda > 0.0) || !(lambda + 0.08 * beta > 0.0)) {
        throw Error(ErrorCode::DomainError, "tip-speed ratio must be positive");
    }
    return std::max(0.0, raw_power_coefficient(lambda, beta, cp));
}

double tip_speed_ratio(double omega, const WtParams& p) {
    return p.radius * omega * p.omega_base / p.v_w;
}

double wt_power(double omega, double beta, const WtParams& p) {
    if (!(omega > 0.0)) throw Error(ErrorCode::DomainError, "rotor speed must be positive");
    return swept_power(p) * power_coefficient(tip_speed_ratio(omega, p), beta, p.cp) / p.power_base;
}

MppPoint wt_mpp(const WtParams& p) {
    require_positive(p.v_w, "wind speed");
    const double lo = speed_for_lambda(0.5, p);
    const double hi = speed_for_lambda(kLambdaScanMax, p);
    return scan_and_refine([&](double w) { return wt_power(w, 0.0, p); }, lo, hi);
}

double wt_max_speed(const WtParams& p) {
    const MppPoint mpp = wt_mpp(p);
    double lambda = tip_speed_ratio(mpp.x, p);
    const double step = 0.01;
    while (raw_power_coefficient(lambda + step, 0.0, p.cp) > 0.0) {
        lambda += step;
        if (lambda > 100.0) throw Error(ErrorCode::NoConvergence, "C_p has no zero above the MPP");
    }
    const double root = bisect_decreasing(
        [&](double l) { return raw_power_coefficient(l, 0.0, p.cp); }, lambda, lambda + step);
    return speed_for_lambda(root, p);
}

WtParams calibrate_wt_power_base(WtParams p, double target) {
    require_positive(target, "target power");
    p.power_base = 1.0;
    const MppPoint mpp = wt_mpp(p);
    p.power_base = mpp.p / target;
    return p;
}

WtSensitivities wt_sensitivities(double omega, double beta, const WtParams& p) {
    require_positive(omega, "rotor speed");
    const double hw = 1e-6 * omega;
    const double hb = 1e-6 * std::max(1.0, std::abs(beta));
    WtSensitivities s;
    s.k_w = -(wt_power(omega + hw, beta, p) - wt_power(omega - hw, beta, p)) / (2.0 * hw);
    s.k_beta = -(wt_power(omega, beta + hb, p) - wt_power(omega, beta - hb, p)) / (2.0 * hb);
    if (std::abs(s.k_w) < 1e-6) s.k_w = 0.0;
    s.k_g = s.k_beta * p.pitch.k_bp;
    return s;
}

double wt_operating_speed(const WtParams& p, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw Error(ErrorCode::DomainError, "curtailment fraction must lie in (0, 1]");
    }
    const MppPoint mpp = wt_mpp(p);
    if (fraction == 1.0) return mpp.x;
    const double target = fraction * mpp.p;
    return bisect_decreasing([&](double w) { return wt_power(w, 0.0, p) - target; }, mpp.x,
                             wt_max_speed(p));
}

// ---------------------------------------------------------------------------
// Sensitivities and classification
// ---------------------------------------------------------------------------

SensitivityTable compute_sensitivities(const DeviceSet& devices) {
    SensitivityTable out;
    for (const auto& [id, m] : devices.machines) {
        NodeSensitivity s;
        if (m.governor && m.wind) {
            throw Error(ErrorCode::ValidationError,
                        "machine '" + id + "' cannot have both a governor and a wind drive");
        }
        if (m.governor) {
            s.source = SourceKind::Governor;
            s.k_g = m.governor->k_g;
            s.T_g = m.governor->T_g;
        } else if (m.wind) {
            const WtSensitivities ws = wt_sensitivities(m.omega_star, m.wind->beta_star, m.wind->params);
            if (ws.k_w < 0.0) {
                throw Error(ErrorCode::UnstableRegion,
                            "wind turbine '" + id + "' operates below its MPP speed");
            }
            s.source = SourceKind::Wind;
            s.k_w = ws.k_w;
            s.k_beta = ws.k_beta;
            s.k_g = ws.k_g;
            s.T_g = m.wind->params.pitch.T_g;
        }
        out[id] = s;
    }
    for (const auto& [id, bus] : devices.buses) {
        NodeSensitivity s;
        if (const auto* c = std::get_if<ControllableDc>(&bus.source)) {
            s.source = SourceKind::Controllable;
            s.k_g = c->k_g;
            s.T_g = c->T_g;
        } else if (const auto* pv = std::get_if<PvSource>(&bus.source)) {
            s.source = SourceKind::Pv;
            s.k_pv = pv_sensitivity(bus.v_star, pv->params);
        }
        out[id] = s;
    }
    return out;
}

void validate_devices(const SystemGraph& graph, const DeviceSet& devices) {
    for (const auto& node : graph.nodes()) {
        const bool machine = node.kind == NodeKind::Machine;
        const bool has_m = devices.machines.count(node.id) != 0;
        const bool has_b = devices.buses.count(node.id) != 0;
        if (machine ? !has_m || has_b : has_m || !has_b) {
            throw Error(ErrorCode::ClassificationMismatch,
                        "node '" + node.id + "' has no device record of kind " + to_string(node.kind));
        }
        if (node.kind == NodeKind::Converter &&
            !std::holds_alternative<std::monostate>(devices.buses.at(node.id).source)) {
            throw Error(ErrorCode::ClassificationMismatch,
                        "converter '" + node.id + "' cannot host a dc source");
        }
    }
    for (const auto& [id, _] : devices.machines) {
        if (!graph.find(id)) throw Error(ErrorCode::ClassificationMismatch, "device '" + id + "' has no node");
    }
    for (const auto& [id, _] : devices.buses) {
        if (!graph.find(id)) throw Error(ErrorCode::ClassificationMismatch, "device '" + id + "' has no node");
    }
    for (const auto& [id, m] : devices.machines) {
        require_positive(m.J, "machine inertia J");
        require_positive(m.omega_star, "machine omega_star");
        if (m.governor) require_positive(m.governor->T_g, "governor T_g");
        if (m.wind) require_positive(m.wind->params.pitch.T_g, "pitch T_g");
    }
    for (const auto& [id, b] : devices.buses) {
        require_positive(b.C, "dc capacitance C");
        require_positive(b.v_star, "dc voltage setpoint v_star");
        if (const auto* c = std::get_if<ControllableDc>(&b.source)) require_positive(c->T_g, "dc source T_g");
    }
}

Classification classify_nodes(const SystemGraph& graph, const SensitivityTable& sens) {
    Classification out;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const Node& node = graph.node(i);
        auto it = sens.find(node.id);
        if (it == sens.end()) {
            throw Error(ErrorCode::ClassificationMismatch, "node '" + node.id + "' has no device data");
        }
        const NodeSensitivity& s = it->second;
        const bool machine_source = s.source == SourceKind::Governor || s.source == SourceKind::Wind;
        const bool dc_source = s.source == SourceKind::Controllable || s.source == SourceKind::Pv;
        if ((node.kind == NodeKind::Machine && dc_source) ||
            (node.kind == NodeKind::DcNode && machine_source) ||
            (node.kind == NodeKind::Converter && s.source != SourceKind::None)) {
            throw Error(ErrorCode::ClassificationMismatch,
                        "node '" + node.id + "' carries a source incompatible with its kind");
        }
        bool placed = false;
        if (s.source == SourceKind::Governor || s.source == SourceKind::Wind ||
            s.source == SourceKind::Controllable) {
            (s.k_g > 0.0 ? out.r : out.zs).push_back(i);
            placed = true;
        }
        if (s.k_pv > 0.0) {
            out.pv.push_back(i);
            placed = true;
        }
        if (s.k_w > 0.0) {
            out.w.push_back(i);
            placed = true;
        }
        if (!placed) out.other.push_back(i);
    }
    return out;
}

}  // namespace hgfm

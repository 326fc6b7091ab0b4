#include "hgfm/sim.hpp"

#include "hgfm/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

namespace hgfm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t v) { return static_cast<Index>(v); }

std::size_t step_count(const SimOptions& o) {
    if (!(o.h > 0.0) || !(o.t_end >= 0.0) || o.stride == 0) {
        throw Error(ErrorCode::ValidationError, "simulation needs h > 0, t_end >= 0 and stride >= 1");
    }
    return static_cast<std::size_t>(std::llround(o.t_end / o.h));
}

std::vector<std::string> frequency_names(const SystemGraph& g) {
    std::vector<std::string> names;
    for (std::size_t i : g.machines()) names.push_back(g.node(i).id);
    for (std::size_t i : g.converters()) names.push_back(g.node(i).id);
    return names;
}

void check_finite(const VectorXd& x, double t) {
    if (!x.allFinite()) {
        throw Error(ErrorCode::NonFiniteState, "state became non-finite at t = " + std::to_string(t));
    }
}

template <typename Rhs>
VectorXd rk4_step(const Rhs& f, const VectorXd& x, double h) {
    const VectorXd k1 = f(x);
    const VectorXd k2 = f(x + 0.5 * h * k1);
    const VectorXd k3 = f(x + 0.5 * h * k2);
    const VectorXd k4 = f(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory make_trajectory(std::size_t samples, const std::vector<std::string>& state_names,
                           const std::vector<std::string>& freq_names) {
    Trajectory tr;
    tr.t.reserve(samples);
    tr.states.resize(idx(samples), idx(state_names.size()));
    tr.frequencies.resize(idx(samples), idx(freq_names.size()));
    tr.state_names = state_names;
    tr.frequency_names = freq_names;
    return tr;
}

// ---------------------------------------------------------------------------
// Nonlinear model
// ---------------------------------------------------------------------------

enum class SourceState { Governor, Wind, Controllable };

struct SourceSlot {
    std::size_t node = 0;
    SourceState kind = SourceState::Governor;
    double T = 1.0;
    double k = 0.0;     // k_g, or k_bp for wind
    double star = 0.0;  // p_star or beta_star
    double k_beta = 0.0;
    std::size_t ref = 0;  // machine position or dc position of the coupled variable
};

class NonlinearModel {
public:
    explicit NonlinearModel(const SystemModel& m) : model_(m), g_(m.system.graph) {
        const auto& dev = m.system.devices;
        nM_ = g_.machines().size();
        nC_ = g_.converters().size();
        nV_ = g_.dc_order().size();
        source_of_machine_.assign(nM_, -1);
        source_of_dc_.assign(nV_, -1);
        for (std::size_t k = 0; k < nM_; ++k) {
            const auto& mp = dev.machines.at(g_.node(g_.machines()[k]).id);
            J_.push_back(mp.J);
            w_star_.push_back(mp.omega_star);
        }
        for (std::size_t j = 0; j < nC_; ++j) {
            const auto& gains = m.system.gains.at(g_.node(g_.converters()[j]).id);
            kp_.push_back(gains.k_p);
            kw_.push_back(gains.k_omega);
            dtheta_.push_back(gains.delta_theta);
        }
        for (std::size_t l = 0; l < nV_; ++l) {
            const auto& bus = dev.buses.at(g_.node(g_.dc_order()[l]).id);
            if (std::abs(bus.v_star - 1.0) > 1e-12) {
                throw Error(ErrorCode::ValidationError,
                            "nonlinear model needs v_star = 1 at '" + g_.node(g_.dc_order()[l]).id + "'");
            }
            C_.push_back(bus.C);
            v_star_.push_back(bus.v_star);
        }
        std::vector<std::size_t> order = m.classification.r;
        order.insert(order.end(), m.classification.zs.begin(), m.classification.zs.end());
        for (std::size_t node : order) {
            SourceSlot s;
            s.node = node;
            const auto& id = g_.node(node).id;
            if (g_.node(node).kind == NodeKind::Machine) {
                const auto& mp = dev.machines.at(id);
                s.ref = *g_.ac_position(node);
                if (mp.governor) {
                    s.kind = SourceState::Governor;
                    s.T = mp.governor->T_g;
                    s.k = mp.governor->k_g;
                    s.star = mp.governor->p_star;
                } else {
                    s.kind = SourceState::Wind;
                    s.T = mp.wind->params.pitch.T_g;
                    s.k = mp.wind->params.pitch.k_bp;
                    s.star = mp.wind->beta_star;
                    s.k_beta = m.sensitivities.at(id).k_beta;
                }
                source_of_machine_[s.ref] = static_cast<int>(slots_.size());
            } else {
                const auto& c = std::get<ControllableDc>(dev.buses.at(id).source);
                s.kind = SourceState::Controllable;
                s.T = c.T_g;
                s.k = c.k_g;
                s.star = c.p_star;
                s.ref = *g_.dc_position(node);
                source_of_dc_[s.ref] = static_cast<int>(slots_.size());
            }
            slots_.push_back(s);
        }
        n_ = 2 * nM_ + nC_ + nV_ + slots_.size();

        const VectorXd x0 = nominal();
        load_machine_.assign(nM_, 0.0);
        load_dc_.assign(nV_, 0.0);
        for (std::size_t k = 0; k < nM_; ++k) load_machine_[k] = mechanical_power(x0, k);
        for (std::size_t l = nC_; l < nV_; ++l) load_dc_[l] = dc_source_power(x0, l);
    }

    [[nodiscard]] std::size_t size() const { return n_; }

    [[nodiscard]] VectorXd nominal() const {
        VectorXd x = VectorXd::Zero(idx(n_));
        for (std::size_t k = 0; k < nM_; ++k) x(idx(o_w() + k)) = w_star_[k];
        for (std::size_t j = 0; j < nC_; ++j) {
            x(idx(o_g() + j)) = kw_[j] != 0.0 ? -dtheta_[j] / kw_[j] : 0.0;
        }
        for (std::size_t l = 0; l < nV_; ++l) x(idx(o_v() + l)) = v_star_[l];
        for (std::size_t s = 0; s < slots_.size(); ++s) x(idx(o_s() + s)) = slots_[s].star;
        return x;
    }

    [[nodiscard]] VectorXd rhs(const VectorXd& x, const VectorXd& pd) const {
        const std::size_t nAc = nM_ + nC_;
        const VectorXd theta = angles(x);
        VectorXd pac = VectorXd::Zero(idx(nAc));
        for (const auto& e : g_.ac_edges()) {
            const auto a = idx(*g_.ac_position(e.from));
            const auto b = idx(*g_.ac_position(e.to));
            const double f = e.weight * std::sin(theta(a) - theta(b));
            pac(a) += f;
            pac(b) -= f;
        }
        VectorXd pdc = VectorXd::Zero(idx(nV_));
        for (const auto& e : g_.dc_edges()) {
            const auto a = idx(*g_.dc_position(e.from));
            const auto b = idx(*g_.dc_position(e.to));
            const double va = x(idx(o_v()) + a);
            const double vb = x(idx(o_v()) + b);
            pdc(a) += e.weight * va * (va - vb);
            pdc(b) += e.weight * vb * (vb - va);
        }
        VectorXd dx(idx(n_));
        for (std::size_t k = 0; k < nM_; ++k) {
            const double w = x(idx(o_w() + k));
            dx(idx(o_t() + k)) = w - w_star_[k];
            dx(idx(o_w() + k)) = (mechanical_power(x, k) - pac(idx(k)) - load_machine_[k] - pd(idx(k))) /
                                 (J_[k] * w);
        }
        for (std::size_t j = 0; j < nC_; ++j) {
            const double v = x(idx(o_v() + j));
            dx(idx(o_g() + j)) = v - v_star_[j];
            dx(idx(o_v() + j)) = (-pac(idx(nM_ + j)) - pdc(idx(j)) - pd(idx(nM_ + j)) - pd(idx(nAc + j))) /
                                 (C_[j] * v);
        }
        for (std::size_t l = nC_; l < nV_; ++l) {
            const double v = x(idx(o_v() + l));
            dx(idx(o_v() + l)) =
                (dc_source_power(x, l) - pdc(idx(l)) - load_dc_[l] - pd(idx(nAc + l))) / (C_[l] * v);
        }
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            const auto& sl = slots_[s];
            const double st = x(idx(o_s() + s));
            double rate = 0.0;
            switch (sl.kind) {
                case SourceState::Governor:
                    rate = -(st - sl.star) - sl.k * (x(idx(o_w() + sl.ref)) - w_star_[sl.ref]);
                    break;
                case SourceState::Wind:
                    rate = -(st - sl.star) + sl.k * (x(idx(o_w() + sl.ref)) - w_star_[sl.ref]);
                    break;
                case SourceState::Controllable:
                    rate = -(st - sl.star) - sl.k * (x(idx(o_v() + sl.ref)) - v_star_[sl.ref]);
                    break;
            }
            dx(idx(o_s() + s)) = rate / sl.T;
        }
        return dx;
    }

    void to_linear(const VectorXd& x, const VectorXd& pd, Eigen::Ref<VectorXd> lin,
                   Eigen::Ref<VectorXd> freq) const {
        const VectorXd theta = angles(x);
        std::size_t r = 0;
        for (const auto& e : g_.ac_edges()) {
            lin(idx(r++)) = theta(idx(*g_.ac_position(e.from))) - theta(idx(*g_.ac_position(e.to)));
        }
        for (std::size_t k = 0; k < nM_; ++k) lin(idx(r++)) = x(idx(o_w() + k)) - w_star_[k];
        for (std::size_t l = 0; l < nV_; ++l) lin(idx(r++)) = x(idx(o_v() + l)) - v_star_[l];
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            const double d = x(idx(o_s() + s)) - slots_[s].star;
            lin(idx(r++)) = slots_[s].kind == SourceState::Wind ? -slots_[s].k_beta * d : d;
        }
        const VectorXd dx = rhs(x, pd);
        for (std::size_t k = 0; k < nM_; ++k) freq(idx(k)) = x(idx(o_w() + k)) - w_star_[k];
        for (std::size_t j = 0; j < nC_; ++j) {
            freq(idx(nM_ + j)) = kp_[j] * dx(idx(o_v() + j)) + kw_[j] * (x(idx(o_v() + j)) - v_star_[j]);
        }
    }

    // Damped Gauss-Newton with minimum-norm steps; the angle reference makes the Jacobian singular.
    [[nodiscard]] VectorXd equilibrium(const VectorXd& pd) const {
        VectorXd x = nominal();
        VectorXd f = rhs(x, pd);
        for (int it = 0; it < 60 && f.lpNorm<Eigen::Infinity>() > 1e-12; ++it) {
            MatrixXd Jac(idx(n_), idx(n_));
            for (std::size_t c = 0; c < n_; ++c) {
                const double h = 1e-7 * std::max(1.0, std::abs(x(idx(c))));
                VectorXd xp = x, xm = x;
                xp(idx(c)) += h;
                xm(idx(c)) -= h;
                Jac.col(idx(c)) = (rhs(xp, pd) - rhs(xm, pd)) / (2.0 * h);
            }
            Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Jac);
            cod.setThreshold(1e-10);
            const VectorXd dxs = cod.solve(-f);
            double alpha = 1.0;
            const double f0 = f.norm();
            for (int ls = 0; ls < 30; ++ls) {
                const VectorXd trial = x + alpha * dxs;
                const VectorXd ft = rhs(trial, pd);
                if (ft.allFinite() && ft.norm() < f0) {
                    x = trial;
                    f = ft;
                    break;
                }
                alpha *= 0.5;
                if (ls == 29) {
                    throw Error(ErrorCode::InitializationFailed, "equilibrium search stalled");
                }
            }
        }
        if (!(f.lpNorm<Eigen::Infinity>() <= 1e-10)) {
            throw Error(ErrorCode::InitializationFailed, "no equilibrium found for the initial disturbance");
        }
        return x;
    }

private:
    [[nodiscard]] std::size_t o_t() const { return 0; }
    [[nodiscard]] std::size_t o_w() const { return nM_; }
    [[nodiscard]] std::size_t o_g() const { return 2 * nM_; }
    [[nodiscard]] std::size_t o_v() const { return 2 * nM_ + nC_; }
    [[nodiscard]] std::size_t o_s() const { return 2 * nM_ + nC_ + nV_; }

    [[nodiscard]] VectorXd angles(const VectorXd& x) const {
        VectorXd th(idx(nM_ + nC_));
        for (std::size_t k = 0; k < nM_; ++k) th(idx(k)) = x(idx(o_t() + k));
        for (std::size_t j = 0; j < nC_; ++j) {
            th(idx(nM_ + j)) = dtheta_[j] + kp_[j] * (x(idx(o_v() + j)) - v_star_[j]) +
                               kw_[j] * x(idx(o_g() + j));
        }
        return th;
    }

    [[nodiscard]] double mechanical_power(const VectorXd& x, std::size_t k) const {
        const int s = source_of_machine_[k];
        const auto& mp = model_.system.devices.machines.at(g_.node(g_.machines()[k]).id);
        if (mp.wind) {
            const double beta = s >= 0 ? x(idx(o_s() + static_cast<std::size_t>(s))) : mp.wind->beta_star;
            return wt_power(x(idx(o_w() + k)), beta, mp.wind->params);
        }
        if (s >= 0) return x(idx(o_s() + static_cast<std::size_t>(s)));
        return 0.0;
    }

    [[nodiscard]] double dc_source_power(const VectorXd& x, std::size_t l) const {
        const auto& bus = model_.system.devices.buses.at(g_.node(g_.dc_order()[l]).id);
        if (const auto* pv = std::get_if<PvSource>(&bus.source)) {
            return pv_power(x(idx(o_v() + l)), pv->params);
        }
        const int s = source_of_dc_[l];
        if (s >= 0) return x(idx(o_s() + static_cast<std::size_t>(s)));
        return 0.0;
    }

    const SystemModel& model_;
    const SystemGraph& g_;
    std::size_t nM_ = 0, nC_ = 0, nV_ = 0, n_ = 0;
    std::vector<double> J_, w_star_, kp_, kw_, dtheta_, C_, v_star_;
    std::vector<SourceSlot> slots_;
    std::vector<int> source_of_machine_, source_of_dc_;
    std::vector<double> load_machine_, load_dc_;
};

}  // namespace

std::vector<double> Trajectory::frequency(const std::string& node) const {
    auto it = std::find(frequency_names.begin(), frequency_names.end(), node);
    if (it == frequency_names.end()) {
        throw Error(ErrorCode::ValidationError, "no frequency recorded for '" + node + "'");
    }
    const auto c = static_cast<Index>(it - frequency_names.begin());
    std::vector<double> out(static_cast<std::size_t>(frequencies.rows()));
    for (Index i = 0; i < frequencies.rows(); ++i) out[static_cast<std::size_t>(i)] = frequencies(i, c);
    return out;
}

std::vector<double> Trajectory::state(const std::string& name) const {
    auto it = std::find(state_names.begin(), state_names.end(), name);
    if (it == state_names.end()) throw Error(ErrorCode::ValidationError, "no state named '" + name + "'");
    const auto c = static_cast<Index>(it - state_names.begin());
    std::vector<double> out(static_cast<std::size_t>(states.rows()));
    for (Index i = 0; i < states.rows(); ++i) out[static_cast<std::size_t>(i)] = states(i, c);
    return out;
}

DisturbanceSchedule::DisturbanceSchedule(const SystemGraph& graph, std::vector<Disturbance> events,
                                         double h) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Disturbance& a, const Disturbance& b) { return a.time < b.time; });
    current_ = VectorXd::Zero(idx(disturbance_size(graph)));
    for (const auto& e : events) {
        if (!(e.time >= 0.0)) throw Error(ErrorCode::ValidationError, "disturbance time must be >= 0");
        const auto k = static_cast<std::size_t>(std::llround(e.time / h));
        const VectorXd p = disturbance_vector(graph, {e});
        if (!steps_.empty() && steps_.back().first == k) {
            steps_.back().second += p;
        } else {
            steps_.emplace_back(k, p);
        }
    }
}

const VectorXd& DisturbanceSchedule::at_step(std::size_t k) {
    while (next_ < steps_.size() && steps_[next_].first <= k) {
        current_ += steps_[next_].second;
        ++next_;
    }
    return current_;
}

Trajectory simulate_linear(const SystemModel& model, const std::vector<Disturbance>& events,
                           const SimOptions& options, const VectorXd& x0) {
    const StateSpace& ss = model.state_space;
    const std::size_t n = ss.layout.size();
    const std::size_t steps = step_count(options);
    const MatrixXd M = ss.T_inverse_A();
    const MatrixXd N = ss.T_inverse_B();
    const auto& g = model.system.graph;
    const std::size_t nM = g.machines().size();

    VectorXd x = x0.size() == 0 ? VectorXd::Zero(idx(n)) : x0;
    if (static_cast<std::size_t>(x.size()) != n) {
        throw Error(ErrorCode::DimensionMismatch, "initial state has the wrong size");
    }
    DisturbanceSchedule schedule(g, events, options.h);
    Trajectory tr = make_trajectory(steps / options.stride + 1, ss.layout.names, frequency_names(g));

    auto record = [&](std::size_t k, const VectorXd& p) {
        const auto row = idx(tr.t.size());
        tr.t.push_back(static_cast<double>(k) * options.h);
        tr.states.row(row) = x.transpose();
        const VectorXd xd = M * x + N * p;
        for (std::size_t i = 0; i < nM; ++i) tr.frequencies(row, idx(i)) = x(idx(ss.layout.omega() + i));
        const VectorXd yc = ss.F * xd + ss.G * x;
        for (Index j = 0; j < yc.size(); ++j) tr.frequencies(row, idx(nM) + j) = yc(j);
    };

    for (std::size_t k = 0;; ++k) {
        const VectorXd& p = schedule.at_step(k);
        if (k % options.stride == 0) record(k, p);
        if (k == steps) break;
        x = rk4_step([&](const VectorXd& y) -> VectorXd { return M * y + N * p; }, x, options.h);
        check_finite(x, static_cast<double>(k + 1) * options.h);
    }
    return tr;
}

Trajectory simulate_nonlinear(const SystemModel& model, const std::vector<Disturbance>& events,
                              const SimOptions& options) {
    NonlinearModel nl(model);
    const std::size_t steps = step_count(options);
    const auto& g = model.system.graph;
    DisturbanceSchedule schedule(g, events, options.h);
    VectorXd x = nl.equilibrium(schedule.at_step(0));
    Trajectory tr = make_trajectory(steps / options.stride + 1, model.state_space.layout.names,
                                    frequency_names(g));
    VectorXd lin(idx(tr.state_names.size()));
    VectorXd freq(idx(tr.frequency_names.size()));
    for (std::size_t k = 0;; ++k) {
        const VectorXd& p = schedule.at_step(k);
        if (k % options.stride == 0) {
            nl.to_linear(x, p, lin, freq);
            const auto row = idx(tr.t.size());
            tr.t.push_back(static_cast<double>(k) * options.h);
            tr.states.row(row) = lin.transpose();
            tr.frequencies.row(row) = freq.transpose();
        }
        if (k == steps) break;
        x = rk4_step([&](const VectorXd& y) -> VectorXd { return nl.rhs(y, p); }, x, options.h);
        check_finite(x, static_cast<double>(k + 1) * options.h);
    }
    return tr;
}

FrequencyMetrics frequency_metrics(const std::vector<double>& t, const std::vector<double>& w,
                                   double window) {
    if (t.size() != w.size() || t.size() < 2) {
        throw Error(ErrorCode::DimensionMismatch, "metrics need matching series with two or more samples");
    }
    if (!(window > 0.0) || window > t.back() - t.front()) {
        throw Error(ErrorCode::WindowTooLong, "RoCoF window exceeds the trajectory span");
    }
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    const auto k = static_cast<std::size_t>(std::max<long long>(1, std::llround(window / dt)));
    FrequencyMetrics m;
    for (std::size_t i = 0; i + k < t.size(); ++i) {
        m.rocof = std::max(m.rocof, std::abs(w[i + k] - w[i]) / (t[i + k] - t[i]));
    }
    const auto it = std::min_element(w.begin(), w.end());
    m.nadir = *it;
    m.t_nadir = t[static_cast<std::size_t>(it - w.begin())];
    const std::size_t tail = std::max<std::size_t>(1, w.size() / 20);
    m.settling = std::accumulate(w.end() - static_cast<std::ptrdiff_t>(tail), w.end(), 0.0) /
                 static_cast<double>(tail);
    return m;
}

std::vector<FrequencyMetrics> metrics(const Trajectory& traj, const std::vector<std::string>& nodes,
                                      double window) {
    std::vector<FrequencyMetrics> out;
    for (const auto& id : nodes) {
        FrequencyMetrics m = frequency_metrics(traj.t, traj.frequency(id), window);
        m.node = id;
        out.push_back(m);
    }
    return out;
}

void write_csv(const Trajectory& traj, std::ostream& os) {
    os << "t";
    for (const auto& n : traj.state_names) os << "," << n;
    for (const auto& n : traj.frequency_names) os << ",freq[" << n << "]";
    os << "\n" << std::setprecision(12);
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        const auto r = idx(i);
        os << traj.t[i];
        for (Index j = 0; j < traj.states.cols(); ++j) os << "," << traj.states(r, j);
        for (Index j = 0; j < traj.frequencies.cols(); ++j) os << "," << traj.frequencies(r, j);
        os << "\n";
    }
}

}  // namespace hgfm

#include "scalar_oracle.hpp"

namespace hgfm::oracle {

using Eigen::VectorXd;

ScalarOracle::ScalarOracle(const SystemModel& model) : m_(model) {
    const auto& g = m_.system.graph;
    nAc_ = g.ac_order().size();
    nM_ = g.machines().size();
    nV_ = g.dc_order().size();
    sources_ = m_.classification.r;
    sources_.insert(sources_.end(), m_.classification.zs.begin(), m_.classification.zs.end());
    nS_ = sources_.size();
    n_ = nAc_ + nM_ + nV_ + nS_;
}

VectorXd ScalarOracle::derivative(const VectorXd& z, const VectorXd& p_d) const {
    const auto& g = m_.system.graph;
    const auto& dev = m_.system.devices;
    auto theta = [&](std::size_t node) { return z(static_cast<long>(*g.ac_position(node))); };
    auto omega = [&](std::size_t k) { return z(static_cast<long>(nAc_ + k)); };
    auto volt = [&](std::size_t node) { return z(static_cast<long>(nAc_ + nM_ + *g.dc_position(node))); };

    std::vector<double> p_ac(g.size(), 0.0), p_dc(g.size(), 0.0), p_src(g.size(), 0.0);
    for (const auto& e : g.ac_edges()) {
        const double f = e.weight * (theta(e.from) - theta(e.to));
        p_ac[e.from] += f;
        p_ac[e.to] -= f;
    }
    for (const auto& e : g.dc_edges()) {
        const double f = e.weight * (volt(e.from) - volt(e.to));
        p_dc[e.from] += f;
        p_dc[e.to] -= f;
    }
    for (std::size_t s = 0; s < nS_; ++s) p_src[sources_[s]] = z(static_cast<long>(nAc_ + nM_ + nV_ + s));

    auto load_ac = [&](std::size_t node) { return p_d(static_cast<long>(*g.ac_position(node))); };
    auto load_dc = [&](std::size_t node) { return p_d(static_cast<long>(nAc_ + *g.dc_position(node))); };

    VectorXd dz = VectorXd::Zero(static_cast<long>(n_));
    std::vector<double> vdot(g.size(), 0.0);
    for (std::size_t node : g.dc_order()) {
        const auto& bus = dev.buses.at(g.node(node).id);
        const double cap = bus.C * bus.v_star;
        double rate = 0.0;
        if (g.node(node).kind == NodeKind::Converter) {
            rate = -p_ac[node] - p_dc[node] - load_ac(node) - load_dc(node);
        } else {
            const double k_pv = m_.sensitivities.at(g.node(node).id).k_pv;
            rate = p_src[node] - k_pv * volt(node) - p_dc[node] - load_dc(node);
        }
        vdot[node] = rate / cap;
        dz(static_cast<long>(nAc_ + nM_ + *g.dc_position(node))) = vdot[node];
    }
    for (std::size_t k = 0; k < nM_; ++k) {
        const std::size_t node = g.machines()[k];
        const auto& mp = dev.machines.at(g.node(node).id);
        const double k_w = m_.sensitivities.at(g.node(node).id).k_w;
        dz(static_cast<long>(*g.ac_position(node))) = omega(k);
        dz(static_cast<long>(nAc_ + k)) =
            (p_src[node] - k_w * omega(k) - p_ac[node] - load_ac(node)) / (mp.J * mp.omega_star);
    }
    for (std::size_t node : g.converters()) {
        const auto& gains = m_.system.gains.at(g.node(node).id);
        dz(static_cast<long>(*g.ac_position(node))) = gains.k_p * vdot[node] + gains.k_omega * volt(node);
    }
    for (std::size_t s = 0; s < nS_; ++s) {
        const std::size_t node = sources_[s];
        const auto& sens = m_.sensitivities.at(g.node(node).id);
        const double y = g.node(node).kind == NodeKind::Machine
                             ? omega(static_cast<std::size_t>(*g.ac_position(node)))
                             : volt(node);
        dz(static_cast<long>(nAc_ + nM_ + nV_ + s)) = (-p_src[node] - sens.k_g * y) / sens.T_g;
    }
    return dz;
}

VectorXd ScalarOracle::to_state(const VectorXd& z) const {
    const auto& g = m_.system.graph;
    const std::size_t nE = g.ac_edges().size();
    VectorXd x(static_cast<long>(nE + nM_ + nV_ + nS_));
    for (std::size_t k = 0; k < nE; ++k) {
        const auto& e = g.ac_edges()[k];
        x(static_cast<long>(k)) = z(static_cast<long>(*g.ac_position(e.from))) - z(static_cast<long>(*g.ac_position(e.to)));
    }
    x.tail(static_cast<long>(nM_ + nV_ + nS_)) = z.tail(static_cast<long>(nM_ + nV_ + nS_));
    return x;
}

VectorXd ScalarOracle::rk4(const VectorXd& z, const VectorXd& p_d, double h) const {
    const VectorXd k1 = derivative(z, p_d);
    const VectorXd k2 = derivative(z + 0.5 * h * k1, p_d);
    const VectorXd k3 = derivative(z + 0.5 * h * k2, p_d);
    const VectorXd k4 = derivative(z + h * k3, p_d);
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace hgfm::oracle

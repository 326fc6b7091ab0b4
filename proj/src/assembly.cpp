#include "hgfm/assembly.hpp"

#include "hgfm/error.hpp"

#include <iomanip>
#include <sstream>

namespace hgfm {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t v) { return static_cast<Index>(v); }

MatrixXd diag_of(const std::vector<double>& values) {
    VectorXd v(idx(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v(idx(i)) = values[i];
    return v.asDiagonal();
}

MatrixXd block_diag(const std::vector<MatrixXd>& blocks) {
    Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    MatrixXd out = MatrixXd::Zero(n, n);
    Index o = 0;
    for (const auto& b : blocks) {
        out.block(o, o, b.rows(), b.cols()) = b;
        o += b.rows();
    }
    return out;
}

}  // namespace

VectorXd StateSpace::derivative(const VectorXd& x, const VectorXd& p_d) const {
    return (A * x + B * p_d).cwiseQuotient(T.diagonal());
}

VectorXd StateSpace::converter_frequencies(const VectorXd& x, const VectorXd& p_d) const {
    return F * derivative(x, p_d) + G * x;
}

MatrixXd StateSpace::T_inverse_A() const { return T.diagonal().cwiseInverse().asDiagonal() * A; }

MatrixXd StateSpace::T_inverse_B() const { return T.diagonal().cwiseInverse().asDiagonal() * B; }

StateSpace assemble_system(const SystemGraph& g, const DeviceSet& devices, const GainTable& gains,
                           const SensitivityTable& sens, const Classification& cls,
                           const NetworkMatrices& m) {
    const std::size_t nE = g.ac_edges().size();
    const std::size_t nM = g.machines().size();
    const std::size_t nC = g.converters().size();
    const std::size_t nV = g.dc_order().size();
    const std::size_t nR = cls.r.size();
    const std::size_t nZ = cls.zs.size();

    std::vector<double> kp, kw, cap, inertia, t_r, t_zs, k_g, k_w, k_pv;
    for (std::size_t c : g.converters()) {
        const auto& id = g.node(c).id;
        auto it = gains.find(id);
        if (it == gains.end()) throw Error(ErrorCode::MissingGains, "converter '" + id + "' has no gains");
        kp.push_back(it->second.k_p);
        kw.push_back(it->second.k_omega);
    }
    for (std::size_t n : g.dc_order()) {
        const auto& bus = devices.buses.at(g.node(n).id);
        cap.push_back(bus.C * bus.v_star);
    }
    for (std::size_t n : g.machines()) {
        const auto& mp = devices.machines.at(g.node(n).id);
        inertia.push_back(mp.J * mp.omega_star);
    }
    for (std::size_t n : cls.r) {
        t_r.push_back(sens.at(g.node(n).id).T_g);
        k_g.push_back(sens.at(g.node(n).id).k_g);
    }
    for (std::size_t n : cls.zs) t_zs.push_back(sens.at(g.node(n).id).T_g);
    for (std::size_t n : cls.w) k_w.push_back(sens.at(g.node(n).id).k_w);
    for (std::size_t n : cls.pv) k_pv.push_back(sens.at(g.node(n).id).k_pv);

    const MatrixXd Kp = diag_of(kp);
    const MatrixXd Kw = diag_of(kw);
    const MatrixXd Cm = diag_of(cap);
    const MatrixXd Kg = diag_of(k_g);
    const MatrixXd Kwind = diag_of(k_w);
    const MatrixXd Kpv = diag_of(k_pv);

    StateSpace ss;
    auto& L = ss.layout;
    L.n_eta = nE;
    L.n_omega = nM;
    L.n_v = nV;
    L.n_r = nR;
    L.n_zs = nZ;
    const Index n = idx(L.size());

    ss.T = block_diag({MatrixXd::Identity(idx(nE), idx(nE)), diag_of(inertia), Cm, diag_of(t_r),
                       diag_of(t_zs)});

    const MatrixXd& B = m.B_ac;
    const MatrixXd& W = m.W_ac;
    const MatrixXd B_eta =
        -(m.I_cac * B).transpose() * Kp * m.I_cdc * Cm.diagonal().cwiseInverse().asDiagonal();

    ss.A = MatrixXd::Zero(n, n);
    auto blk = [&](std::size_t r, std::size_t c, std::size_t rows, std::size_t cols) {
        return ss.A.block(idx(r), idx(c), idx(rows), idx(cols));
    };
    const std::size_t oe = L.eta(), ow = L.omega(), ov = L.v(), orr = L.r(), oz = L.zs();

    blk(oe, oe, nE, nE) = B_eta * m.I_cdc.transpose() * m.I_cac * B * W;
    blk(oe, ow, nE, nM) = (m.I_ac * B).transpose();
    blk(oe, ov, nE, nV) = (m.I_cac * B).transpose() * Kw * m.I_cdc + B_eta * m.L_dc;

    blk(ow, oe, nM, nE) = -m.I_ac * B * W;
    blk(ow, ow, nM, nM) = -m.I_w.transpose() * Kwind * m.I_w;
    blk(ow, orr, nM, nR) = m.I_r_ac.transpose();
    blk(ow, oz, nM, nZ) = m.I_zs_ac.transpose();

    const MatrixXd Ipv_dc = m.I_pv * m.I_dc;
    blk(ov, oe, nV, nE) = -m.I_cdc.transpose() * m.I_cac * B * W;
    blk(ov, ov, nV, nV) = -m.L_dc - Ipv_dc.transpose() * Kpv * Ipv_dc;
    blk(ov, orr, nV, nR) = (m.I_r_dc * m.I_dc).transpose();
    blk(ov, oz, nV, nZ) = (m.I_zs_dc * m.I_dc).transpose();

    blk(orr, ow, nR, nM) = -Kg * m.I_r_ac;
    blk(orr, ov, nR, nV) = -Kg * m.I_r_dc * m.I_dc;
    blk(orr, orr, nR, nR) = -MatrixXd::Identity(idx(nR), idx(nR));
    blk(oz, oz, nZ, nZ) = -MatrixXd::Identity(idx(nZ), idx(nZ));

    const std::size_t nAc = g.ac_order().size();
    const Index nd = idx(nAc + nV);
    ss.B = MatrixXd::Zero(n, nd);
    ss.B.block(idx(oe), 0, idx(nE), idx(nAc)) = B_eta * m.I_cdc.transpose() * m.I_cac;
    ss.B.block(idx(oe), idx(nAc), idx(nE), idx(nV)) = B_eta;
    ss.B.block(idx(ow), 0, idx(nM), idx(nAc)) = -m.I_ac;
    ss.B.block(idx(ov), 0, idx(nV), idx(nAc)) = -m.I_cdc.transpose() * m.I_cac;
    ss.B.block(idx(ov), idx(nAc), idx(nV), idx(nV)) = -MatrixXd::Identity(idx(nV), idx(nV));

    ss.F = MatrixXd::Zero(idx(nC), n);
    ss.G = MatrixXd::Zero(idx(nC), n);
    ss.F.block(0, idx(ov), idx(nC), idx(nV)) = Kp * m.I_cdc;
    ss.G.block(0, idx(ov), idx(nC), idx(nV)) = Kw * m.I_cdc;

    for (const auto& e : g.ac_edges()) {
        L.names.push_back("eta[" + g.node(e.from).id + "," + g.node(e.to).id + "]");
    }
    for (std::size_t i : g.machines()) L.names.push_back("omega[" + g.node(i).id + "]");
    for (std::size_t i : g.dc_order()) L.names.push_back("v[" + g.node(i).id + "]");
    for (std::size_t i : cls.r) L.names.push_back("P_r[" + g.node(i).id + "]");
    for (std::size_t i : cls.zs) L.names.push_back("P_zs[" + g.node(i).id + "]");
    for (std::size_t i : g.ac_order()) ss.disturbance_names.push_back("ac[" + g.node(i).id + "]");
    for (std::size_t i : g.dc_order()) ss.disturbance_names.push_back("dc[" + g.node(i).id + "]");
    for (std::size_t i : g.converters()) ss.output_names.push_back(g.node(i).id);
    return ss;
}

SystemModel build_model(HybridSystem system) {
    validate_devices(system.graph, system.devices);
    SystemModel model;
    model.sensitivities = compute_sensitivities(system.devices);
    model.classification = classify_nodes(system.graph, model.sensitivities);
    model.decomposition = decompose_subnetworks(system.graph);
    model.matrices = network_matrices(system.graph, model.classification);
    model.state_space = assemble_system(system.graph, system.devices, system.gains,
                                        model.sensitivities, model.classification, model.matrices);
    model.system = std::move(system);
    return model;
}

std::size_t disturbance_size(const SystemGraph& g) {
    return g.ac_order().size() + g.dc_order().size();
}

VectorXd disturbance_vector(const SystemGraph& g, const std::vector<Disturbance>& list) {
    const std::size_t nAc = g.ac_order().size();
    VectorXd p = VectorXd::Zero(idx(disturbance_size(g)));
    auto add_at = [&](std::size_t node, Terminal t, double dP, const std::string& label) {
        if (t == Terminal::Ac) {
            auto pos = g.ac_position(node);
            if (!pos) throw Error(ErrorCode::NoSuchTerminal, "node '" + label + "' has no ac terminal");
            p(idx(*pos)) += dP;
        } else {
            auto pos = g.dc_position(node);
            if (!pos) throw Error(ErrorCode::NoSuchTerminal, "node '" + label + "' has no dc terminal");
            p(idx(nAc + *pos)) += dP;
        }
    };
    for (const auto& d : list) {
        if (auto node = g.find(d.node)) {
            add_at(*node, d.terminal, d.dP, d.node);
            continue;
        }
        const auto& passive = d.terminal == Terminal::Ac ? g.passive_ac_loads : g.passive_dc_loads;
        auto it = passive.find(d.node);
        if (it == passive.end()) {
            const auto& other = d.terminal == Terminal::Ac ? g.passive_dc_loads : g.passive_ac_loads;
            if (other.count(d.node) != 0) {
                throw Error(ErrorCode::NoSuchTerminal, "bus '" + d.node + "' has no such terminal");
            }
            throw Error(ErrorCode::ValidationError, "disturbance at unknown node '" + d.node + "'");
        }
        for (const auto& share : it->second) add_at(share.node, d.terminal, d.dP * share.fraction, d.node);
    }
    return p;
}

std::string dump_state_space(const StateSpace& ss) {
    std::ostringstream os;
    os << std::setprecision(17);
    auto dump = [&](const char* name, const MatrixXd& M, const std::vector<std::string>& rows,
                    const std::vector<std::string>& cols) {
        os << name << " " << M.rows() << "x" << M.cols() << "\n";
        os << "row";
        for (const auto& c : cols) os << "," << c;
        os << "\n";
        for (Index i = 0; i < M.rows(); ++i) {
            os << rows[static_cast<std::size_t>(i)];
            for (Index j = 0; j < M.cols(); ++j) os << "," << M(i, j);
            os << "\n";
        }
    };
    dump("T", ss.T, ss.layout.names, ss.layout.names);
    dump("A", ss.A, ss.layout.names, ss.layout.names);
    dump("B", ss.B, ss.layout.names, ss.disturbance_names);
    dump("F", ss.F, ss.output_names, ss.layout.names);
    dump("G", ss.G, ss.output_names, ss.layout.names);
    return os.str();
}

}  // namespace hgfm
